// ugseg: command-line front end for the uncertainty-guided domain
// generalization pipeline (data generation, augmentation preview, training,
// evaluation, uncertainty maps, ablations/sweeps).
//
// Exit codes: 0 success, 2 usage/config/validation error, 3 numeric error,
// 4 I/O error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ugseg/harness.hpp"
#include "ugseg/pgm.hpp"

namespace fs = std::filesystem;
using namespace ugseg;

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

/// Config resolution: defaults, then --config file, then explicit flags.
struct Overrides {
  std::optional<std::int64_t> epochs, batch_size, mc_passes, image_size;
  std::optional<double> learning_rate, m, beta_max, alpha, sigma, dropout_rate;
  std::optional<std::uint64_t> seed, data_seed;
  std::optional<int> held_out, precision, threads, domains, per_domain, ablation_seeds;
  std::optional<std::string> variant;

  void apply(TrainConfig& cfg) const {
    if (epochs) cfg.epochs = *epochs;
    if (batch_size) cfg.batch_size = *batch_size;
    if (learning_rate) cfg.learning_rate = *learning_rate;
    if (m) cfg.m = *m;
    if (beta_max) cfg.beta_max = *beta_max;
    if (alpha) cfg.alpha = *alpha;
    if (mc_passes) cfg.mc_passes = *mc_passes;
    if (sigma) cfg.sigma = *sigma;
    if (dropout_rate) cfg.dropout_rate = *dropout_rate;
    if (seed) cfg.seed = *seed;
    if (held_out) cfg.held_out = *held_out;
    if (variant) cfg.variant = variant_from_string(*variant);
    if (precision) cfg.precision = *precision;
    if (threads) cfg.threads = *threads;
    if (data_seed) cfg.data_seed = *data_seed;
    if (domains) cfg.domains = *domains;
    if (per_domain) cfg.per_domain = *per_domain;
    if (image_size) cfg.image_size = *image_size;
    if (ablation_seeds) cfg.ablation_seeds = *ablation_seeds;
  }
};

struct ConfigFlags {
  std::string config_path;
  Overrides ov;
  bool print_config = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_flag("--print-config", print_config,
                  "print the resolved configuration and exit");
    cmd->add_option("--epochs", ov.epochs);
    cmd->add_option("--batch-size", ov.batch_size);
    cmd->add_option("--learning-rate", ov.learning_rate);
    cmd->add_option("--m", ov.m);
    cmd->add_option("--beta-max", ov.beta_max);
    cmd->add_option("--alpha", ov.alpha);
    cmd->add_option("--mc-passes", ov.mc_passes);
    cmd->add_option("--sigma", ov.sigma);
    cmd->add_option("--dropout-rate", ov.dropout_rate);
    cmd->add_option("--seed", ov.seed);
    cmd->add_option("--held-out", ov.held_out);
    cmd->add_option("--variant", ov.variant, "erm|fda|fda+con|full");
    cmd->add_option("--precision", ov.precision, "32|64");
    cmd->add_option("--threads", ov.threads);
    cmd->add_option("--data-seed", ov.data_seed);
    cmd->add_option("--domains", ov.domains);
    cmd->add_option("--per-domain", ov.per_domain);
    cmd->add_option("--image-size", ov.image_size);
    cmd->add_option("--ablation-seeds", ov.ablation_seeds);
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path, cfg);
    ov.apply(cfg);
    return cfg;
  }
};

std::vector<DomainDataset> load_or_generate(const std::string& data_dir,
                                            const TrainConfig& cfg) {
  if (!data_dir.empty()) return load_dataset(data_dir);
  return generate_benchmark(default_domains(cfg.domains), cfg.per_domain,
                            cfg.data_seed, cfg.image_size);
}

void save_spectrum_view(const Tensor<double>& img, const std::string& path) {
  ComplexSpectrum spec = fftshift(fft2d(img));
  Tensor<double> view = decompose(spec).first;
  view.shape = {view.shape[1], view.shape[2]};  // [1,H,W] -> [H,W]
  double max_log = 0.0;
  for (auto& v : view.data) {
    v = std::log1p(v);
    max_log = std::max(max_log, v);
  }
  if (max_log > 0.0) {
    for (auto& v : view.data) v /= max_log;
  }
  save_pgm(view, path, PgmRange::kZeroOne);
}

int cmd_gen_data(const std::string& out_dir, int domains, int per_domain,
                 std::int64_t size, std::uint64_t seed) {
  if (size < 8 || (size & (size - 1)) != 0) {
    throw ConfigError("--size must be a power of two >= 8");
  }
  if (per_domain < 1) throw ConfigError("--per-domain must be >= 1");
  const auto bench = generate_benchmark(default_domains(domains), per_domain, seed, size);
  save_dataset(bench, out_dir);
  std::cout << "wrote " << bench.size() << " domains x " << per_domain << " samples ("
            << size << "x" << size << ") to " << out_dir << "\n";
  return 0;
}

int cmd_augment(const std::string& input, const std::string& style, double alpha,
                std::uint64_t seed, const std::string& out,
                const std::string& dump_dir) {
  const Tensor<double> x = load_pgm(input);
  const Tensor<double> x_other = load_pgm(style);
  if (x.shape != x_other.shape) {
    throw ShapeError("augment: input and style sizes differ: " + shape_str(x.shape) +
                     " vs " + shape_str(x_other.shape));
  }
  Rng rng(seed);
  const Tensor<double> mixed = augment(x, x_other, rng, alpha);
  if (const fs::path parent = fs::path(out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  save_pgm(mixed, out, PgmRange::kMinusOneOne);
  if (!dump_dir.empty()) {
    fs::create_directories(dump_dir);
    save_spectrum_view(x, (fs::path(dump_dir) / "input_logamp.pgm").string());
    save_spectrum_view(x_other, (fs::path(dump_dir) / "style_logamp.pgm").string());
    save_spectrum_view(mixed, (fs::path(dump_dir) / "output_logamp.pgm").string());
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

template <typename T>
int run_train(const TrainConfig& cfg, const std::vector<DomainDataset>& bench,
              const std::string& out_dir) {
  auto [pool, test] = split_leave_one_out(bench, cfg.held_out);
  TrainedModel<T> model = train<T>(cfg, pool);
  fs::create_directories(out_dir);
  save_network(model.student, (fs::path(out_dir) / "student.bin").string());
  save_network(model.teacher, (fs::path(out_dir) / "teacher.bin").string());
  write_text_file((fs::path(out_dir) / "train_log.csv").string(), log_to_csv(model.log));
  write_text_file((fs::path(out_dir) / "config.txt").string(), print_config(cfg));
  EvalReport report = evaluate_model(model.student, test);
  write_text_file((fs::path(out_dir) / "report.csv").string(), report.to_csv());
  if (report.asd_excluded > 0) {
    std::cerr << "warning: " << report.asd_excluded
              << " sample(s) excluded from ASD means (empty boundary)\n";
  }
  std::cout << "held-out domain" << cfg.held_out << ": dsc=" << report.avg_dsc();
  if (const auto a = report.avg_asd(); a.has_value()) std::cout << " asd=" << *a;
  std::cout << "\n";
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& data_dir,
              const std::string& out_dir) {
  const TrainConfig cfg = flags.resolve();
  cfg.validate();
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  const auto bench = load_or_generate(data_dir, cfg);
  if (cfg.precision == 64) return run_train<double>(cfg, bench, out_dir);
  return run_train<float>(cfg, bench, out_dir);
}

int cmd_evaluate(const std::string& pred_dir, const std::string& gt_dir,
                 const std::string& ckpt, const std::string& data_dir, int held_out,
                 const std::string& out_path) {
  EvalReport report;
  if (!pred_dir.empty() || !gt_dir.empty()) {
    if (pred_dir.empty() || gt_dir.empty() || !ckpt.empty()) {
      throw ConfigError("evaluate: file mode needs --pred and --gt (and no --ckpt)");
    }
    report = evaluate_mask_dirs(pred_dir, gt_dir);
  } else {
    if (ckpt.empty() || data_dir.empty()) {
      throw ConfigError(
          "evaluate: pass either --pred/--gt or --ckpt/--data/--held-out");
    }
    const auto bench = load_dataset(data_dir);
    auto [pool, test] = split_leave_one_out(bench, held_out);
    Rng init_rng(0);
    SegNetwork<float> net = SegNetwork<float>::init(init_rng);
    load_network(net, ckpt);
    report = evaluate_model(net, test);
  }
  write_text_file(out_path, report.to_csv());
  if (report.asd_excluded > 0) {
    std::cerr << "warning: " << report.asd_excluded
              << " sample(s) excluded from ASD means (empty boundary)\n";
  }
  std::cout << "dsc=" << report.avg_dsc();
  if (const auto a = report.avg_asd(); a.has_value()) std::cout << " asd=" << *a;
  std::cout << " (" << report.rows.size() << " samples) -> " << out_path << "\n";
  return 0;
}

int cmd_uncertainty(const std::string& ckpt, const std::string& input,
                    std::int64_t passes, double sigma, double dropout_rate,
                    std::uint64_t seed, const std::string& out) {
  Rng init_rng(0);
  SegNetwork<float> net = SegNetwork<float>::init(init_rng, 1, dropout_rate);
  load_network(net, ckpt);
  const Tensor<double> img = load_pgm(input);
  Tensor<float> x = Tensor<float>::zeros({1, 1, img.shape[1], img.shape[2]});
  for (std::int64_t i = 0; i < img.numel(); ++i) x[i] = static_cast<float>(img[i]);
  Rng rng(seed);
  auto [mean_pred, umap] = estimate_uncertainty(net, x, passes, sigma, rng);
  if (const fs::path parent = fs::path(out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  emit_visualization(umap, out);
  double mean_entropy = 0.0;
  for (const float v : umap.values.data) mean_entropy += v;
  mean_entropy /= static_cast<double>(umap.values.numel());
  std::cout << "mean entropy " << mean_entropy << " nats over " << passes
            << " passes -> " << out << "\n";
  return 0;
}

int cmd_ablation(const ConfigFlags& flags, const std::string& sweep,
                 const std::string& out_dir) {
  const TrainConfig cfg = flags.resolve();
  cfg.validate();
  if (flags.print_config) {
    std::cout << print_config(cfg);
    return 0;
  }
  GridReport grid;
  std::string stem = "ablation";
  if (sweep.empty()) {
    grid = run_ablation(cfg);
  } else {
    grid = run_sweep(cfg, sweep);
    stem = "sweep_" + sweep;
  }
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / (stem + ".csv")).string(), grid.grid_csv());
  write_text_file((fs::path(out_dir) / (stem + "_runs.csv")).string(), grid.runs_csv());
  std::cout << grid.grid_csv();
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-guided domain-generalized segmentation pipeline"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "render the synthetic multi-domain benchmark");
  std::string gen_out;
  int gen_domains = 4, gen_per_domain = 60;
  std::int64_t gen_size = 64;
  std::uint64_t gen_seed = 9001;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--domains", gen_domains);
  gen->add_option("--per-domain", gen_per_domain);
  gen->add_option("--size", gen_size);
  gen->add_option("--seed", gen_seed);

  // augment
  auto* aug = app.add_subcommand("augment", "preview one Fourier amplitude mix");
  std::string aug_input, aug_style, aug_out, aug_dump;
  double aug_alpha = 0.1;
  std::uint64_t aug_seed = 1;
  aug->add_option("--input", aug_input, "content image (PGM)")->required();
  aug->add_option("--style", aug_style, "style donor image (PGM)")->required();
  aug->add_option("--alpha", aug_alpha);
  aug->add_option("--seed", aug_seed);
  aug->add_option("--out", aug_out, "output PGM")->required();
  aug->add_option("--dump-spectrum", aug_dump,
                  "directory for log-amplitude spectra of input/style/output");

  // train
  auto* tr = app.add_subcommand("train", "train one leave-one-domain-out model");
  ConfigFlags tr_flags;
  tr_flags.attach(tr);
  std::string tr_data, tr_out = "run";
  tr->add_option("--data", tr_data, "dataset directory from gen-data "
                                    "(default: generate in memory)");
  tr->add_option("--out", tr_out, "output directory");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score predictions or a checkpoint");
  std::string ev_pred, ev_gt, ev_ckpt, ev_data, ev_out = "report.csv";
  int ev_held_out = 1;
  ev->add_option("--pred", ev_pred, "directory of predicted masks (PGM)");
  ev->add_option("--gt", ev_gt, "directory of ground-truth masks (PGM)");
  ev->add_option("--ckpt", ev_ckpt, "student checkpoint (UGTN)");
  ev->add_option("--data", ev_data, "dataset directory (checkpoint mode)");
  ev->add_option("--held-out", ev_held_out, "held-out domain id (checkpoint mode)");
  ev->add_option("--out", ev_out, "report CSV path");

  // uncertainty
  auto* un = app.add_subcommand("uncertainty", "MC-dropout entropy map for one image");
  std::string un_ckpt, un_input, un_out = "umap.pgm";
  std::int64_t un_passes = 8;
  double un_sigma = 0.1, un_dropout = 0.1;
  std::uint64_t un_seed = 1;
  un->add_option("--ckpt", un_ckpt, "teacher checkpoint (UGTN)")->required();
  un->add_option("--input", un_input, "input image (PGM)")->required();
  un->add_option("--passes", un_passes);
  un->add_option("--sigma", un_sigma);
  un->add_option("--dropout-rate", un_dropout);
  un->add_option("--seed", un_seed);
  un->add_option("--out", un_out, "output PGM");

  // ablation
  auto* ab = app.add_subcommand("ablation", "variant ablation or beta/m sweep grids");
  ConfigFlags ab_flags;
  ab_flags.attach(ab);
  std::string ab_sweep, ab_out = "ablation";
  ab->add_option("--sweep", ab_sweep, "run a sweep instead: beta|m");
  ab->add_option("--out", ab_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    return guarded([&] { return cmd_gen_data(gen_out, gen_domains, gen_per_domain,
                                             gen_size, gen_seed); });
  }
  if (aug->parsed()) {
    return guarded([&] { return cmd_augment(aug_input, aug_style, aug_alpha, aug_seed,
                                            aug_out, aug_dump); });
  }
  if (tr->parsed()) {
    return guarded([&] { return cmd_train(tr_flags, tr_data, tr_out); });
  }
  if (ev->parsed()) {
    return guarded([&] { return cmd_evaluate(ev_pred, ev_gt, ev_ckpt, ev_data,
                                             ev_held_out, ev_out); });
  }
  if (un->parsed()) {
    return guarded([&] { return cmd_uncertainty(un_ckpt, un_input, un_passes, un_sigma,
                                                un_dropout, un_seed, un_out); });
  }
  if (ab->parsed()) {
    return guarded([&] { return cmd_ablation(ab_flags, ab_sweep, ab_out); });
  }
  return 2;
}
