#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pwinr/data_io.hpp"
#include "pwinr/model.hpp"
#include "pwinr/objective.hpp"
#include "pwinr/psf.hpp"
#include "pwinr/tensor.hpp"

namespace pwinr {

// Region-of-interest geometry. Disk coordinates refer to pixel centers, so
// a pixel belongs to a disk when its center lies within the radius.
enum class RoiKind { rect, disk };

// What the region feeds: lesion interior / surrounding background (CNR
// pair), a speckle patch (SNR), or a point-target neighborhood (FWHM).
enum class RoiRole { target_in, background_out, snr_roi, scatterer_point };

struct RoiRegion {
  std::string name;
  RoiKind kind = RoiKind::rect;
  RoiRole role = RoiRole::snr_roi;

  // rect extents.
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  // disk extents, in pixel units.
  double center_row = 0;
  double center_col = 0;
  double radius_px = 0;

  // Linear row-major indices of the member pixels, ascending.
  std::vector<std::size_t> pixel_indices(std::size_t height, std::size_t width) const;

  // Bounds and non-emptiness against an image grid. Throws ContractError.
  void validate(std::size_t height, std::size_t width) const;
};

struct RoiSpec {
  std::vector<RoiRegion> regions;

  void validate(std::size_t height, std::size_t width) const;  // throws ContractError
  std::vector<const RoiRegion*> with_role(RoiRole role) const;
};

// Line-oriented region list, one region per line:
//   name rect ROLE row0 col0 rows cols
//   name disk ROLE center_row center_col radius_px
// where ROLE is target_in | background_out | snr_roi | scatterer_point.
// '#' starts a comment. Throws FormatError with the offending line number.
RoiSpec parse_roi_spec(const std::string& text);

// Axis of a resolution profile: axial runs down the rows (depth), lateral
// across the columns.
enum class ProfileAxis { axial, lateral };

// 10·log10(range² / MSE). Identical images give +inf.
template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& gt, double data_range = 1.0);

// Mean SSIM over the map, evaluated in double precision. Defined as
// 1 − ssim_loss on the same images, so the metric and the training
// objective cannot disagree.
template <typename T>
double ssim_metric(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg);

// Width of the point response whose peak lies inside `region`, in mm.
// Works on a dB image: the 1-D profile through the peak pixel is walked
// outward to the first samples below peak − 6 dB and each crossing is
// placed by linear interpolation between the straddling samples. Throws
// NumericalError when the profile never crosses the threshold inside the
// image or the peak is not a strict local maximum along the axis.
template <typename T>
double fwhm(const Tensor<T>& image_db, const RoiRegion& region, ProfileAxis axis,
            double pitch_mm);

// Contrast-to-noise ratio between two disjoint regions, in dB:
// 10·log10(|μ_in − μ_out|² / ((σ_in² + σ_out²)/2)) with population
// variances. Equal means give −inf; zero variance under distinct means
// gives +inf.
template <typename T>
double cnr(const Tensor<T>& image, const RoiRegion& inside, const RoiRegion& outside);

// μ/σ over one region with the population σ; σ = 0 gives +inf.
template <typename T>
double snr(const Tensor<T>& image, const RoiRegion& region);

// One measured value: the rendering it was taken on ("gt" ground truth,
// "o" network output, "op" output after the blur kernel), the metric name,
// and the region ("" for whole-image metrics).
struct MetricValue {
  std::string image;
  std::string metric;
  std::string region;
  double value = 0;
};

struct AngleReport {
  std::size_t view = 0;
  float angle_deg = 0;
  std::vector<MetricValue> values;
};

// Mean and population std across the evaluated angles, over the finite
// per-angle values only; count says how many entered. A row with no
// finite values reports NaN and count 0.
struct AggregateValue {
  std::string image;
  std::string metric;
  std::string region;
  double mean = 0;
  double stddev = 0;
  std::size_t count = 0;
};

struct MetricsReport {
  std::string stack_tag;
  std::string scale_note;  // which intensity scale each metric family used
  std::vector<AngleReport> per_view;
  std::vector<AggregateValue> aggregate;
};

// Which views of the stack to evaluate: every view, or only the held-out
// near-orthogonal view that training under holdout never saw.
enum class EvalViews { all, holdout };

// Renders the network output o and its blurred version o′ for each
// selected view and measures everything the ROI spec asks for, on the
// ground truth as well as on o and o′. SSIM/PSNR/CNR/SNR are taken on
// [0,1]-normalized intensity, FWHM on the dB image; failed width
// measurements are recorded as NaN instead of aborting the evaluation.
MetricsReport evaluate_stack(const ModelParams<float>& params, const PlaneWaveStack& stack,
                             const RoiSpec& roi, EvalViews views,
                             const PsfKernel<float>& kernel = make_kernel<float>(),
                             const LossConfig& loss = LossConfig{});

// Per-angle rows: view,angle_deg,image,metric,region,value.
std::string to_csv(const MetricsReport& report);

// Aggregate block plus identifying metadata, serialized as JSON.
std::string to_json(const MetricsReport& report);

}  // namespace pwinr
