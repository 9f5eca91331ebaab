#include "pwinr/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pwinr/common.hpp"
#include "pwinr/data_io.hpp"
#include "pwinr/encoding.hpp"
#include "pwinr/kernels.hpp"
#include "pwinr/metrics.hpp"
#include "pwinr/model.hpp"
#include "pwinr/psf.hpp"
#include "pwinr/trainer.hpp"
#include "wire.hpp"

namespace pwinr {

namespace {

namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + path.string());
}

std::uint32_t file_crc(const std::string& path) {
  const std::vector<std::uint8_t> bytes = wire::read_file(path);
  return crc32(bytes.data(), bytes.size());
}

const char* backend_name() {
  return kernels::active_backend() == kernels::Backend::openmp ? "openmp" : "serial";
}

nlohmann::json config_json(const TrainConfig& cfg) {
  return {
      {"iterations", cfg.iterations},
      {"stripes_per_image", cfg.stripes_per_image},
      {"learning_rate", cfg.learning_rate},
      {"lr_end", cfg.lr_end},
      {"beta1", cfg.beta1},
      {"beta2", cfg.beta2},
      {"epsilon", cfg.epsilon},
      {"seed", cfg.seed},
      {"view_list", cfg.view_list},
      {"view_count", cfg.view_count},
      {"holdout_orthogonal", cfg.holdout_orthogonal},
      {"checkpoint_every", cfg.checkpoint_every},
      {"checkpoint_path", cfg.checkpoint_path},
      {"arch",
       {{"num_layers", cfg.arch.num_layers},
        {"width", cfg.arch.width},
        {"skip_index", cfg.arch.skip_index},
        {"embedding_size", cfg.arch.embedding_size}}},
      {"loss",
       {{"lambda", cfg.loss.lambda},
        {"ssim_window", cfg.loss.ssim_window},
        {"ssim_sigma", cfg.loss.ssim_sigma},
        {"k1", cfg.loss.k1},
        {"k2", cfg.loss.k2},
        {"data_range", cfg.loss.data_range}}},
      {"psf",
       {{"axial_sigma", cfg.psf_axial_sigma},
        {"lateral_sigma", cfg.psf_lateral_sigma},
        {"size", cfg.psf_size}}},
  };
}

// Every artifact directory carries exactly one manifest describing how its
// contents came to be.
void write_manifest(const fs::path& dir, nlohmann::json manifest) {
  manifest["tool"] = "pwinr";
  manifest["version"] = kToolVersion;
  manifest["backend"] = backend_name();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

void write_loss_csv(const fs::path& path, const std::vector<float>& history) {
  std::ostringstream out;
  out << "iteration,loss\n" << std::setprecision(9);
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
  write_text(path, out.str());
}

const AggregateValue& find_aggregate(const MetricsReport& report, const std::string& image,
                                     const std::string& metric) {
  for (const AggregateValue& a : report.aggregate) {
    if (a.image == image && a.metric == metric && a.region.empty()) return a;
  }
  throw ContractError("report lacks the " + image + " " + metric + " aggregate");
}

ImageFormat resolve_format(const std::string& format, const std::string& out_path) {
  if (format == "pgm8") return ImageFormat::pgm8;
  if (format == "pgm16") return ImageFormat::pgm16;
  if (format == "png8") return ImageFormat::png8;
  if (out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".png") {
    return ImageFormat::png8;
  }
  if (out_path.size() >= 4 && out_path.substr(out_path.size() - 4) == ".pgm") {
    return ImageFormat::pgm8;
  }
  throw ContractError("cannot infer an image format from '" + out_path +
                      "'; pass --format pgm8|pgm16|png8");
}

// Full-grid forward pass at one steering angle, as an H×W image.
TensorF infer_image(const ModelParams<float>& params, std::size_t height, std::size_t width,
                    float angle_norm) {
  const CoordBatch<float> coords = grid_coords<float>(height, width, 0, height, angle_norm);
  const EncodedBatch<float> enc = positional_encode(coords, params.arch.embedding_size);
  return forward(params, enc.gamma).reshaped({height, width});
}

struct PhantomArgs {
  std::string spec_path;
  std::string out_path;
  std::uint64_t seed = 0;
};

int cmd_phantom(const PhantomArgs& args, std::ostream& out) {
  const PhantomSpec spec = args.spec_path.empty()
                               ? default_phantom_spec()
                               : parse_phantom_spec(read_text(args.spec_path));
  const PlaneWaveStack stack = generate_phantom(spec, args.seed);
  const std::size_t bytes = save_stack(stack, args.out_path);
  out << "wrote " << args.out_path << ": " << stack.height << "x" << stack.width << "x"
      << stack.view_count() << " views, " << bytes << " bytes\n";
  return 0;
}

struct TrainArgs {
  std::string stack_path;
  std::string out_dir;
  std::string views = "all";
  bool skip_given = false;
  TrainConfig cfg;
};

// The stock depth-8 network injects the skip at layer 5; scale that choice
// (half depth plus one) when only the layer count is overridden.
void finalize_arch(TrainConfig& cfg, bool skip_given) {
  if (!skip_given) cfg.arch.skip_index = cfg.arch.num_layers / 2 + 1;
}

std::size_t parse_view_count(const std::string& views) {
  if (views == "all") return 0;
  return static_cast<std::size_t>(std::stoull(views));
}

int cmd_train(TrainArgs args, std::ostream& out) {
  const PlaneWaveStack stack = load_stack(args.stack_path);
  finalize_arch(args.cfg, args.skip_given);
  args.cfg.view_count = parse_view_count(args.views);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  if (args.cfg.checkpoint_every > 0 && args.cfg.checkpoint_path.empty()) {
    args.cfg.checkpoint_path = (dir / "checkpoint.pwck").string();
  }

  auto [params, report] = train(stack, args.cfg);

  save_weights(params, (dir / "weights.pwin").string());
  write_loss_csv(dir / "loss.csv", report.loss_history);
  write_manifest(dir, {
                          {"command", "train"},
                          {"seed", args.cfg.seed},
                          {"inputs",
                           {{"stack",
                             {{"path", args.stack_path}, {"crc32", file_crc(args.stack_path)}}}}},
                          {"config", config_json(args.cfg)},
                          {"view_indices", report.view_indices},
                          {"parameter_count", report.parameter_count},
                          {"outputs", {{"weights", "weights.pwin"}, {"loss", "loss.csv"}}},
                          {"timings", {{"train_seconds", report.wall_seconds}}},
                      });
  out << "trained " << report.parameter_count << " parameters, " << report.view_indices.size()
      << " views, " << args.cfg.iterations << " iterations in " << std::fixed
      << std::setprecision(1) << report.wall_seconds << " s; final loss "
      << std::setprecision(6) << report.loss_history.back() << "\n";
  return 0;
}

struct InferArgs {
  std::string weights_path;
  std::string out_path;
  std::string which = "o_prime";
  std::string format = "auto";
  double angle_deg = 0.0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> span = {-16.0, 16.0};
  float psf_axial = 2.0f;
  float psf_lateral = 4.0f;
  std::size_t psf_size = 11;
};

int cmd_infer(const InferArgs& args, std::ostream& out) {
  const ModelParams<float> params = load_weights(args.weights_path);
  if (args.span.size() != 2 || !(args.span[0] < args.span[1])) {
    throw ContractError("--span expects MIN MAX with MIN < MAX");
  }
  if (args.height == 0 || args.width == 0) {
    throw ContractError("--height and --width must be positive");
  }
  const float angle_norm =
      normalize_to_unit(static_cast<float>(args.angle_deg), static_cast<float>(args.span[0]),
                        static_cast<float>(args.span[1]));
  TensorF image = infer_image(params, args.height, args.width, angle_norm);
  if (args.which == "o_prime") {
    image = render(image, make_kernel<float>(args.psf_axial, args.psf_lateral, args.psf_size));
  }
  const std::size_t bytes =
      export_image(image, args.out_path, resolve_format(args.format, args.out_path));
  out << "wrote " << args.out_path << ": " << args.height << "x" << args.width << " "
      << args.which << " at " << args.angle_deg << " deg, " << bytes << " bytes\n";
  return 0;
}

struct EvalArgs {
  std::string weights_path;
  std::string stack_path;
  std::string roi_path;
  std::string out_dir;
  bool holdout = false;
  float psf_axial = 2.0f;
  float psf_lateral = 4.0f;
  std::size_t psf_size = 11;
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const ModelParams<float> params = load_weights(args.weights_path);
  const PlaneWaveStack stack = load_stack(args.stack_path);
  RoiSpec roi;
  if (!args.roi_path.empty()) roi = parse_roi_spec(read_text(args.roi_path));
  const PsfKernel<float> kernel =
      make_kernel<float>(args.psf_axial, args.psf_lateral, args.psf_size);

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  const MetricsReport full = evaluate_stack(params, stack, roi, EvalViews::all, kernel);
  write_text(dir / "report.csv", to_csv(full));
  write_text(dir / "aggregate.json", to_json(full));
  nlohmann::json outputs = {{"report", "report.csv"}, {"aggregate", "aggregate.json"}};
  if (args.holdout) {
    const MetricsReport held = evaluate_stack(params, stack, roi, EvalViews::holdout, kernel);
    write_text(dir / "holdout.csv", to_csv(held));
    write_text(dir / "holdout_aggregate.json", to_json(held));
    outputs["holdout"] = "holdout.csv";
    outputs["holdout_aggregate"] = "holdout_aggregate.json";
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json inputs = {
      {"weights", {{"path", args.weights_path}, {"crc32", file_crc(args.weights_path)}}},
      {"stack", {{"path", args.stack_path}, {"crc32", file_crc(args.stack_path)}}}};
  if (!args.roi_path.empty()) {
    inputs["roi"] = {{"path", args.roi_path}, {"crc32", file_crc(args.roi_path)}};
  }
  write_manifest(dir, {{"command", "eval"},
                       {"inputs", std::move(inputs)},
                       {"outputs", std::move(outputs)},
                       {"timings", {{"eval_seconds", seconds}}}});

  const AggregateValue& ssim = find_aggregate(full, "op", "ssim");
  out << "evaluated " << full.per_view.size() << " views: ssim " << std::fixed
      << std::setprecision(4) << ssim.mean << " +/- " << ssim.stddev << "\n";
  return 0;
}

struct SweepArgs {
  std::string stack_path;
  std::string out_dir;
  std::vector<std::size_t> counts;
  bool skip_given = false;
  TrainConfig cfg;
};

int cmd_sweep(SweepArgs args, std::ostream& out) {
  const PlaneWaveStack stack = load_stack(args.stack_path);
  finalize_arch(args.cfg, args.skip_given);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);

  std::ostringstream summary;
  summary << "views,ssim_mean,ssim_std,psnr_mean,psnr_std\n" << std::setprecision(9);
  for (std::size_t count : args.counts) {
    TrainConfig cfg = args.cfg;
    cfg.view_count = count;
    const fs::path sub = dir / ("views_" + std::to_string(count));
    fs::create_directories(sub);

    auto [params, report] = train(stack, cfg);
    save_weights(params, (sub / "weights.pwin").string());
    write_loss_csv(sub / "loss.csv", report.loss_history);

    const MetricsReport metrics = evaluate_stack(params, stack, RoiSpec{}, EvalViews::all);
    write_text(sub / "report.csv", to_csv(metrics));
    write_text(sub / "aggregate.json", to_json(metrics));
    write_manifest(sub, {{"command", "sweep"},
                         {"seed", cfg.seed},
                         {"inputs",
                          {{"stack",
                            {{"path", args.stack_path}, {"crc32", file_crc(args.stack_path)}}}}},
                         {"config", config_json(cfg)},
                         {"view_indices", report.view_indices},
                         {"timings", {{"train_seconds", report.wall_seconds}}}});

    const AggregateValue& ssim = find_aggregate(metrics, "op", "ssim");
    const AggregateValue& psnr_agg = find_aggregate(metrics, "op", "psnr");
    summary << count << ',' << ssim.mean << ',' << ssim.stddev << ',' << psnr_agg.mean << ','
            << psnr_agg.stddev << '\n';
    out << "views " << count << ": ssim " << std::fixed << std::setprecision(4) << ssim.mean
        << " +/- " << ssim.stddev << "\n";
    out.unsetf(std::ios::floatfield);
  }
  write_text(dir / "summary.csv", summary.str());
  write_manifest(dir, {{"command", "sweep"},
                       {"counts", args.counts},
                       {"inputs",
                        {{"stack",
                          {{"path", args.stack_path}, {"crc32", file_crc(args.stack_path)}}}}},
                       {"config", config_json(args.cfg)},
                       {"outputs", {{"summary", "summary.csv"}}}});
  out << "wrote " << (dir / "summary.csv").string() << "\n";
  return 0;
}

struct ReportArgs {
  std::string weights_path;
  std::string stack_path;
  std::string encoding = "float32";
};

int cmd_report(const ReportArgs& args, std::ostream& out) {
  if (!fs::exists(args.weights_path)) throw IoError("cannot read " + args.weights_path);
  const std::size_t weight_bytes = static_cast<std::size_t>(fs::file_size(args.weights_path));
  const PlaneWaveStack stack = load_stack(args.stack_path);
  const StackEncoding encoding =
      args.encoding == "uint8" ? StackEncoding::uint8 : StackEncoding::float32;
  const CompressionReport report = compression_report(weight_bytes, stack, encoding);
  out << "model bytes: " << report.model_bytes << "\n";
  out << "stack bytes: " << report.stack_bytes << " (" << args.encoding << ")\n";
  out << "ratio: " << std::fixed << std::setprecision(2) << report.ratio << "\n";
  return 0;
}

// Shared by train and sweep: everything that shapes the optimization.
void add_train_options(CLI::App* cmd, TrainConfig& cfg, bool& skip_given) {
  cmd->add_option("--iterations", cfg.iterations, "optimization steps");
  cmd->add_option("--stripes", cfg.stripes_per_image, "stripes per image");
  cmd->add_option("--lr", cfg.learning_rate, "initial learning rate");
  cmd->add_option("--lr-end", cfg.lr_end, "learning rate at the last step");
  cmd->add_option("--seed", cfg.seed, "rng seed for init and shuffling");
  cmd->add_option("--width", cfg.arch.width, "hidden layer width");
  cmd->add_option("--layers", cfg.arch.num_layers, "hidden layer count");
  cmd->add_option("--skip", cfg.arch.skip_index, "skip connection layer (1-based)")
      ->each([&skip_given](const std::string&) { skip_given = true; });
  cmd->add_option("--embedding", cfg.arch.embedding_size, "frequency embedding size L");
  cmd->add_option("--lambda", cfg.loss.lambda, "ssim weight in the loss");
  cmd->add_option("--psf-axial", cfg.psf_axial_sigma, "blur sigma along depth, px");
  cmd->add_option("--psf-lateral", cfg.psf_lateral_sigma, "blur sigma across columns, px");
  cmd->add_option("--psf-size", cfg.psf_size, "blur kernel size, odd");
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  if (const char* env = std::getenv("PWINR_BACKEND")) {
    const std::string value(env);
    if (value == "serial") {
      kernels::set_backend(kernels::Backend::serial);
    } else if (value == "openmp") {
      kernels::set_backend(kernels::Backend::openmp);
    } else if (!value.empty()) {
      err << "error: PWINR_BACKEND must be 'serial' or 'openmp', not '" << value << "'\n";
      return 2;
    }
  }

  CLI::App app{"coordinate-network compression of plane-wave image stacks", "pwinr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  // Config files are only read by the top-level parser; sections like [train]
  // address the matching subcommand.  fallthrough() lets --config appear after
  // the subcommand name and still reach this option.
  app.set_config("--config", "", "read defaults from an ini/toml file (one section per subcommand)");
  app.fallthrough();

  PhantomArgs phantom_args;
  CLI::App* phantom = app.add_subcommand("phantom", "generate a synthetic stack");
  phantom->add_option("--spec", phantom_args.spec_path,
                      "phantom description file (omit for the stock scene)");
  phantom->add_option("--seed", phantom_args.seed, "speckle seed");
  phantom->add_option("--out", phantom_args.out_path, "output stack path")->required();

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a network to a stack");
  train_cmd->add_option("--stack", train_args.stack_path, "input stack")->required();
  train_cmd->add_option("--out", train_args.out_dir, "artifact directory")->required();
  train_cmd
      ->add_option("--views", train_args.views,
                   "training view count ('all' or a positive number)")
      ->check([](const std::string& v) -> std::string {
        if (v == "all") return {};
        try {
          if (std::stoull(v) > 0) return {};
        } catch (...) {
        }
        return std::string("must be 'all' or a positive view count");
      });
  train_cmd->add_flag("--holdout-orthogonal", train_args.cfg.holdout_orthogonal,
                      "exclude the 0-degree-nearest view from training");
  train_cmd->add_option("--checkpoint-every", train_args.cfg.checkpoint_every,
                        "steps between checkpoints (0 = never)");
  add_train_options(train_cmd, train_args.cfg, train_args.skip_given);

  InferArgs infer_args;
  CLI::App* infer = app.add_subcommand("infer", "render a view from trained weights");
  infer->add_option("--weights", infer_args.weights_path, "weight file")->required();
  infer->add_option("--out", infer_args.out_path, "output image path")->required();
  infer->add_option("--angle", infer_args.angle_deg, "steering angle in degrees");
  infer->add_option("--height", infer_args.height, "output rows")->required();
  infer->add_option("--width", infer_args.width, "output columns")->required();
  infer->add_option("--which", infer_args.which, "network output o or blurred o_prime")
      ->check(CLI::IsMember({"o", "o_prime"}));
  infer->add_option("--span", infer_args.span, "trained angle span MIN MAX in degrees")
      ->expected(2);
  infer->add_option("--format", infer_args.format, "image format (default: by extension)")
      ->check(CLI::IsMember({"auto", "pgm8", "pgm16", "png8"}));
  infer->add_option("--psf-axial", infer_args.psf_axial, "blur sigma along depth, px");
  infer->add_option("--psf-lateral", infer_args.psf_lateral, "blur sigma across columns, px");
  infer->add_option("--psf-size", infer_args.psf_size, "blur kernel size, odd");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "measure a model against a stack");
  eval_cmd->add_option("--weights", eval_args.weights_path, "weight file")->required();
  eval_cmd->add_option("--stack", eval_args.stack_path, "reference stack")->required();
  eval_cmd->add_option("--roi", eval_args.roi_path, "region-of-interest list");
  eval_cmd->add_option("--out", eval_args.out_dir, "artifact directory")->required();
  eval_cmd->add_flag("--holdout", eval_args.holdout,
                     "also report the held-out orthogonal view separately");
  eval_cmd->add_option("--psf-axial", eval_args.psf_axial, "blur sigma along depth, px");
  eval_cmd->add_option("--psf-lateral", eval_args.psf_lateral,
                       "blur sigma across columns, px");
  eval_cmd->add_option("--psf-size", eval_args.psf_size, "blur kernel size, odd");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "train once per view count and compare");
  sweep->add_option("--stack", sweep_args.stack_path, "input stack")->required();
  sweep->add_option("--out", sweep_args.out_dir, "artifact directory")->required();
  sweep->add_option("--counts", sweep_args.counts, "training view counts")
      ->required()
      ->delimiter(',');
  add_train_options(sweep, sweep_args.cfg, sweep_args.skip_given);

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "compare model and stack storage sizes");
  report->add_option("--weights", report_args.weights_path, "weight file")->required();
  report->add_option("--stack", report_args.stack_path, "stack file")->required();
  report->add_option("--encoding", report_args.encoding, "stack storage encoding")
      ->check(CLI::IsMember({"float32", "uint8"}));

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(phantom)) return cmd_phantom(phantom_args, out);
    if (app.got_subcommand(train_cmd)) return cmd_train(std::move(train_args), out);
    if (app.got_subcommand(infer)) return cmd_infer(infer_args, out);
    if (app.got_subcommand(eval_cmd)) return cmd_eval(eval_args, out);
    if (app.got_subcommand(sweep)) return cmd_sweep(std::move(sweep_args), out);
    if (app.got_subcommand(report)) return cmd_report(report_args, out);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pwinr
