#include "pwinr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "pwinr/common.hpp"
#include "pwinr/encoding.hpp"
#include "pwinr/trainer.hpp"

namespace pwinr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* role_name(RoiRole role) {
  switch (role) {
    case RoiRole::target_in: return "target_in";
    case RoiRole::background_out: return "background_out";
    case RoiRole::snr_roi: return "snr_roi";
    case RoiRole::scatterer_point: return "scatterer_point";
  }
  return "?";
}

// Mean and population variance of the region pixels, accumulated in
// double no matter the image element type.
template <typename T>
std::pair<double, double> region_moments(const Tensor<T>& image,
                                         const std::vector<std::size_t>& idx) {
  double sum = 0;
  for (std::size_t i : idx) sum += static_cast<double>(image.data()[i]);
  const double mean = sum / static_cast<double>(idx.size());
  double acc = 0;
  for (std::size_t i : idx) {
    const double d = static_cast<double>(image.data()[i]) - mean;
    acc += d * d;
  }
  return {mean, acc / static_cast<double>(idx.size())};
}

template <typename T>
void require_rank2(const Tensor<T>& image, const char* what) {
  if (image.rank() != 2 || image.empty()) {
    throw DimensionError(std::string(what) + " expects a non-empty rank-2 image");
  }
}

}  // namespace

std::vector<std::size_t> RoiRegion::pixel_indices(std::size_t height, std::size_t width) const {
  std::vector<std::size_t> idx;
  if (kind == RoiKind::rect) {
    idx.reserve(rows * cols);
    for (std::size_t r = row0; r < row0 + rows && r < height; ++r) {
      for (std::size_t c = col0; c < col0 + cols && c < width; ++c) {
        idx.push_back(r * width + c);
      }
    }
    return idx;
  }
  const double rr = radius_px * radius_px;
  const long r_lo = std::max(0L, static_cast<long>(std::ceil(center_row - radius_px)));
  const long r_hi = std::min(static_cast<long>(height) - 1,
                             static_cast<long>(std::floor(center_row + radius_px)));
  const long c_lo = std::max(0L, static_cast<long>(std::ceil(center_col - radius_px)));
  const long c_hi = std::min(static_cast<long>(width) - 1,
                             static_cast<long>(std::floor(center_col + radius_px)));
  for (long r = r_lo; r <= r_hi; ++r) {
    for (long c = c_lo; c <= c_hi; ++c) {
      const double dr = static_cast<double>(r) - center_row;
      const double dc = static_cast<double>(c) - center_col;
      if (dr * dr + dc * dc <= rr) idx.push_back(static_cast<std::size_t>(r) * width + c);
    }
  }
  return idx;
}

void RoiRegion::validate(std::size_t height, std::size_t width) const {
  if (name.empty()) throw ContractError("roi region without a name");
  const std::string tag = "roi region '" + name + "': ";
  if (height == 0 || width == 0) throw ContractError(tag + "empty image grid");
  if (kind == RoiKind::rect) {
    if (rows == 0 || cols == 0) throw ContractError(tag + "rect extents must be positive");
    if (row0 + rows > height || col0 + cols > width) {
      throw ContractError(tag + "rect exceeds the image bounds");
    }
    return;
  }
  if (!(radius_px >= 0) || !std::isfinite(center_row) || !std::isfinite(center_col) ||
      !std::isfinite(radius_px)) {
    throw ContractError(tag + "disk parameters must be finite with radius >= 0");
  }
  if (center_row - radius_px < 0 || center_row + radius_px > static_cast<double>(height - 1) ||
      center_col - radius_px < 0 || center_col + radius_px > static_cast<double>(width - 1)) {
    throw ContractError(tag + "disk exceeds the image bounds");
  }
  // The nearest pixel center decides emptiness.
  const double dr = std::round(center_row) - center_row;
  const double dc = std::round(center_col) - center_col;
  if (dr * dr + dc * dc > radius_px * radius_px) {
    throw ContractError(tag + "disk contains no pixel centers");
  }
}

void RoiSpec::validate(std::size_t height, std::size_t width) const {
  for (const RoiRegion& region : regions) {
    region.validate(height, width);
    for (const RoiRegion& other : regions) {
      if (&other != &region && other.name == region.name) {
        throw ContractError("duplicate roi region name '" + region.name + "'");
      }
    }
  }
}

std::vector<const RoiRegion*> RoiSpec::with_role(RoiRole role) const {
  std::vector<const RoiRegion*> out;
  for (const RoiRegion& region : regions) {
    if (region.role == role) out.push_back(&region);
  }
  return out;
}

RoiSpec parse_roi_spec(const std::string& text) {
  RoiSpec spec;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    const std::string where = "roi spec line " + std::to_string(lineno) + ": ";
    RoiRegion region;
    std::string kind_word, role_word;
    if (!(fields >> region.name)) continue;  // blank or comment-only line
    if (!(fields >> kind_word >> role_word)) {
      throw FormatError(where + "expected 'name kind role params...'");
    }
    if (kind_word == "rect") {
      region.kind = RoiKind::rect;
    } else if (kind_word == "disk") {
      region.kind = RoiKind::disk;
    } else {
      throw FormatError(where + "unknown region kind '" + kind_word + "'");
    }
    if (role_word == "target_in") {
      region.role = RoiRole::target_in;
    } else if (role_word == "background_out") {
      region.role = RoiRole::background_out;
    } else if (role_word == "snr_roi") {
      region.role = RoiRole::snr_roi;
    } else if (role_word == "scatterer_point") {
      region.role = RoiRole::scatterer_point;
    } else {
      throw FormatError(where + "unknown region role '" + role_word + "'");
    }
    if (region.kind == RoiKind::rect) {
      long long v[4];
      for (long long& field : v) {
        if (!(fields >> field)) throw FormatError(where + "rect needs row0 col0 rows cols");
        if (field < 0) throw FormatError(where + "rect parameters must be non-negative");
      }
      region.row0 = static_cast<std::size_t>(v[0]);
      region.col0 = static_cast<std::size_t>(v[1]);
      region.rows = static_cast<std::size_t>(v[2]);
      region.cols = static_cast<std::size_t>(v[3]);
    } else {
      if (!(fields >> region.center_row >> region.center_col >> region.radius_px)) {
        throw FormatError(where + "disk needs center_row center_col radius_px");
      }
    }
    std::string extra;
    if (fields >> extra) throw FormatError(where + "unexpected trailing field '" + extra + "'");
    spec.regions.push_back(std::move(region));
  }
  return spec;
}

template <typename T>
double psnr(const Tensor<T>& pred, const Tensor<T>& gt, double data_range) {
  if (!pred.same_shape(gt)) throw DimensionError("psnr images differ in shape");
  require_rank2(pred, "psnr");
  if (!(data_range > 0)) throw ContractError("psnr data range must be positive");
  double acc = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - static_cast<double>(gt.data()[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(pred.numel());
  if (mse == 0) return kInf;
  return 10.0 * std::log10(data_range * data_range / mse);
}

template <typename T>
double ssim_metric(const Tensor<T>& pred, const Tensor<T>& gt, const LossConfig& cfg) {
  return 1.0 - ssim_loss(pred.template cast<double>(), gt.template cast<double>(), cfg);
}

template <typename T>
double fwhm(const Tensor<T>& image_db, const RoiRegion& region, ProfileAxis axis,
            double pitch_mm) {
  require_rank2(image_db, "fwhm");
  if (!(pitch_mm > 0)) throw ContractError("fwhm pitch must be positive");
  const std::size_t height = image_db.rows();
  const std::size_t width = image_db.cols();
  region.validate(height, width);

  const std::vector<std::size_t> idx = region.pixel_indices(height, width);
  std::size_t best = idx.front();
  for (std::size_t i : idx) {
    if (image_db.data()[i] > image_db.data()[best]) best = i;
  }
  const std::size_t peak_row = best / width;
  const std::size_t peak_col = best % width;

  std::vector<double> prof;
  std::size_t pos;
  if (axis == ProfileAxis::axial) {
    prof.resize(height);
    for (std::size_t r = 0; r < height; ++r) prof[r] = image_db.at(r, peak_col);
    pos = peak_row;
  } else {
    prof.resize(width);
    for (std::size_t c = 0; c < width; ++c) prof[c] = image_db.at(peak_row, c);
    pos = peak_col;
  }
  const std::string tag = "fwhm of region '" + region.name + "': ";
  if (pos == 0 || pos + 1 == prof.size() || prof[pos] <= prof[pos - 1] ||
      prof[pos] <= prof[pos + 1]) {
    throw NumericalError(tag + "peak is not a strict local maximum along the profile");
  }

  const double threshold = prof[pos] - 6.0;
  std::size_t l = pos;
  while (l > 0 && prof[l - 1] >= threshold) --l;
  if (l == 0) throw NumericalError(tag + "profile never falls 6 dB left of the peak");
  const double left =
      static_cast<double>(l - 1) + (threshold - prof[l - 1]) / (prof[l] - prof[l - 1]);

  std::size_t r = pos;
  while (r + 1 < prof.size() && prof[r + 1] >= threshold) ++r;
  if (r + 1 == prof.size()) {
    throw NumericalError(tag + "profile never falls 6 dB right of the peak");
  }
  const double right =
      static_cast<double>(r) + (prof[r] - threshold) / (prof[r] - prof[r + 1]);

  return (right - left) * pitch_mm;
}

template <typename T>
double cnr(const Tensor<T>& image, const RoiRegion& inside, const RoiRegion& outside) {
  require_rank2(image, "cnr");
  const std::size_t height = image.rows();
  const std::size_t width = image.cols();
  inside.validate(height, width);
  outside.validate(height, width);
  const std::vector<std::size_t> in_idx = inside.pixel_indices(height, width);
  const std::vector<std::size_t> out_idx = outside.pixel_indices(height, width);
  std::vector<std::size_t> overlap;
  std::set_intersection(in_idx.begin(), in_idx.end(), out_idx.begin(), out_idx.end(),
                        std::back_inserter(overlap));
  if (!overlap.empty()) {
    throw ContractError("cnr regions '" + inside.name + "' and '" + outside.name +
                        "' overlap");
  }
  const auto [mean_in, var_in] = region_moments(image, in_idx);
  const auto [mean_out, var_out] = region_moments(image, out_idx);
  const double diff = mean_in - mean_out;
  if (diff == 0) return -kInf;
  const double noise = (var_in + var_out) / 2.0;
  if (noise == 0) return kInf;
  return 10.0 * std::log10(diff * diff / noise);
}

template <typename T>
double snr(const Tensor<T>& image, const RoiRegion& region) {
  require_rank2(image, "snr");
  region.validate(image.rows(), image.cols());
  const auto [mean, var] = region_moments(image, region.pixel_indices(image.rows(), image.cols()));
  if (var == 0) return kInf;
  return mean / std::sqrt(var);
}

MetricsReport evaluate_stack(const ModelParams<float>& params, const PlaneWaveStack& stack,
                             const RoiSpec& roi, EvalViews views, const PsfKernel<float>& kernel,
                             const LossConfig& loss) {
  stack.validate();
  params.arch.validate();
  loss.validate();
  roi.validate(stack.height, stack.width);

  std::vector<std::size_t> selected;
  if (views == EvalViews::all) {
    selected.resize(stack.view_count());
    std::iota(selected.begin(), selected.end(), std::size_t{0});
  } else {
    selected.push_back(orthogonal_view(stack.view_count()));
  }

  const auto ins = roi.with_role(RoiRole::target_in);
  const auto outs = roi.with_role(RoiRole::background_out);
  const auto snr_regions = roi.with_role(RoiRole::snr_roi);
  const auto points = roi.with_role(RoiRole::scatterer_point);

  MetricsReport report;
  report.stack_tag = stack.tag;
  report.scale_note = "ssim/psnr/cnr/snr on [0,1]-normalized intensity; fwhm on dB";

  const float lo = stack.angles_deg.front();
  const float hi = stack.angles_deg.back();

  for (std::size_t v : selected) {
    AngleReport row;
    row.view = v;
    row.angle_deg = stack.angles_deg[v];

    const TensorF& gt_db = stack.images[v];
    const TensorF gt = normalize_db(gt_db, stack.dyn_min, stack.dyn_max);
    const float angle_norm = normalize_to_unit(stack.angles_deg[v], lo, hi);
    const CoordBatch<float> coords =
        grid_coords<float>(stack.height, stack.width, 0, stack.height, angle_norm);
    const EncodedBatch<float> enc = positional_encode(coords, params.arch.embedding_size);
    const TensorF o = forward(params, enc.gamma).reshaped({stack.height, stack.width});
    const TensorF op = render(o, kernel);
    const TensorF o_db = denormalize_db(o, stack.dyn_min, stack.dyn_max);
    const TensorF op_db = denormalize_db(op, stack.dyn_min, stack.dyn_max);

    struct Rendering {
      const char* name;
      const TensorF* unit;
      const TensorF* db;
    };
    const Rendering renderings[] = {
        {"gt", &gt, &gt_db}, {"o", &o, &o_db}, {"op", &op, &op_db}};

    auto push = [&row](const char* image, const char* metric, std::string region,
                       double value) {
      row.values.push_back({image, metric, std::move(region), value});
    };
    auto guarded_fwhm = [](const TensorF& db, const RoiRegion& region, ProfileAxis axis,
                           double pitch) {
      try {
        return fwhm(db, region, axis, pitch);
      } catch (const NumericalError&) {
        return kNaN;  // a failed width measurement must not sink the report
      }
    };

    for (const Rendering& rendering : renderings) {
      push(rendering.name, "ssim", "", ssim_metric(*rendering.unit, gt, loss));
      push(rendering.name, "psnr", "", psnr(*rendering.unit, gt, loss.data_range));
      for (const RoiRegion* in : ins) {
        for (const RoiRegion* out : outs) {
          push(rendering.name, "cnr", in->name + "/" + out->name,
               cnr(*rendering.unit, *in, *out));
        }
      }
      for (const RoiRegion* region : snr_regions) {
        push(rendering.name, "snr", region->name, snr(*rendering.unit, *region));
      }
      for (const RoiRegion* point : points) {
        push(rendering.name, "fwhm_axial", point->name,
             guarded_fwhm(*rendering.db, *point, ProfileAxis::axial,
                          stack.axial_pitch_mm));
        push(rendering.name, "fwhm_lateral", point->name,
             guarded_fwhm(*rendering.db, *point, ProfileAxis::lateral,
                          stack.lateral_pitch_mm));
      }
    }
    report.per_view.push_back(std::move(row));
  }

  // Every view emits the same row sequence, so aggregation runs by
  // position; finite values only, count recording how many entered.
  if (!report.per_view.empty()) {
    const std::size_t n_rows = report.per_view.front().values.size();
    for (std::size_t j = 0; j < n_rows; ++j) {
      const MetricValue& head = report.per_view.front().values[j];
      AggregateValue agg{head.image, head.metric, head.region, kNaN, kNaN, 0};
      double sum = 0;
      for (const AngleReport& view_row : report.per_view) {
        const double value = view_row.values[j].value;
        if (std::isfinite(value)) {
          sum += value;
          ++agg.count;
        }
      }
      if (agg.count > 0) {
        agg.mean = sum / static_cast<double>(agg.count);
        double acc = 0;
        for (const AngleReport& view_row : report.per_view) {
          const double value = view_row.values[j].value;
          if (std::isfinite(value)) {
            const double d = value - agg.mean;
            acc += d * d;
          }
        }
        agg.stddev = std::sqrt(acc / static_cast<double>(agg.count));
      }
      report.aggregate.push_back(std::move(agg));
    }
  }
  return report;
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "view,angle_deg,image,metric,region,value\n";
  out << std::setprecision(10);
  for (const AngleReport& row : report.per_view) {
    for (const MetricValue& value : row.values) {
      out << row.view << ',' << row.angle_deg << ',' << value.image << ',' << value.metric
          << ',' << value.region << ',' << value.value << '\n';
    }
  }
  return out.str();
}

std::string to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["stack"] = report.stack_tag;
  j["scales"] = report.scale_note;
  j["views"] = nlohmann::json::array();
  for (const AngleReport& row : report.per_view) {
    j["views"].push_back({{"view", row.view}, {"angle_deg", row.angle_deg}});
  }
  j["aggregate"] = nlohmann::json::array();
  for (const AggregateValue& agg : report.aggregate) {
    j["aggregate"].push_back({{"image", agg.image},
                              {"metric", agg.metric},
                              {"region", agg.region},
                              {"mean", agg.mean},
                              {"stddev", agg.stddev},
                              {"count", agg.count}});
  }
  return j.dump(2);
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&, double);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&, double);
template double ssim_metric<float>(const Tensor<float>&, const Tensor<float>&,
                                   const LossConfig&);
template double ssim_metric<double>(const Tensor<double>&, const Tensor<double>&,
                                    const LossConfig&);
template double fwhm<float>(const Tensor<float>&, const RoiRegion&, ProfileAxis, double);
template double fwhm<double>(const Tensor<double>&, const RoiRegion&, ProfileAxis, double);
template double cnr<float>(const Tensor<float>&, const RoiRegion&, const RoiRegion&);
template double cnr<double>(const Tensor<double>&, const RoiRegion&, const RoiRegion&);
template double snr<float>(const Tensor<float>&, const RoiRegion&);
template double snr<double>(const Tensor<double>&, const RoiRegion&);

}  // namespace pwinr
