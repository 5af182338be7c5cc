#include "ugseg/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ugseg/pgm.hpp"

namespace ugseg {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

BinaryMask mask_from_pm1(const Tensor<double>& t) {
  if (t.rank() != 3 || t.shape[0] != 1) {
    throw ShapeError("evaluate_mask_dirs: expected 1xHxW PGM planes");
  }
  BinaryMask m;
  m.h = t.shape[1];
  m.w = t.shape[2];
  m.v.resize(static_cast<std::size_t>(t.numel()));
  for (std::int64_t i = 0; i < t.numel(); ++i) m.v[static_cast<std::size_t>(i)] = t[i] >= 0.0;
  return m;
}

}  // namespace

std::string log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out << "epoch,step,dice,uce,con,beta_eff,total\n";
  for (const TrainLogRow& r : rows) {
    out << r.epoch << ',' << r.step << ',' << fmt(r.dice) << ',' << fmt(r.uce) << ','
        << fmt(r.con) << ',' << fmt(r.beta_eff) << ',' << fmt(r.total) << '\n';
  }
  return out.str();
}

void EvalReport::add(const std::string& domain, const std::string& sample,
                     double dsc_value, std::optional<double> asd_value) {
  if (std::find(domains.begin(), domains.end(), domain) == domains.end()) {
    domains.push_back(domain);
  }
  if (!asd_value.has_value()) ++asd_excluded;
  rows.push_back({domain, sample, dsc_value, asd_value});
}

double EvalReport::domain_dsc(const std::string& domain) const {
  double sum = 0.0;
  std::int64_t n = 0;
  for (const EvalRow& r : rows) {
    if (r.domain == domain) {
      sum += r.dsc;
      ++n;
    }
  }
  if (n == 0) throw ValueError("EvalReport: unknown domain " + domain);
  return sum / static_cast<double>(n);
}

std::optional<double> EvalReport::domain_asd(const std::string& domain) const {
  double sum = 0.0;
  std::int64_t n = 0;
  bool seen = false;
  for (const EvalRow& r : rows) {
    if (r.domain == domain) {
      seen = true;
      if (r.asd.has_value()) {
        sum += *r.asd;
        ++n;
      }
    }
  }
  if (!seen) throw ValueError("EvalReport: unknown domain " + domain);
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double EvalReport::avg_dsc() const {
  if (domains.empty()) throw ValueError("EvalReport: empty report");
  double sum = 0.0;
  for (const std::string& d : domains) sum += domain_dsc(d);
  return sum / static_cast<double>(domains.size());
}

std::optional<double> EvalReport::avg_asd() const {
  if (domains.empty()) throw ValueError("EvalReport: empty report");
  double sum = 0.0;
  std::int64_t n = 0;
  for (const std::string& d : domains) {
    const auto a = domain_asd(d);
    if (a.has_value()) {
      sum += *a;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "domain,sample,dsc,asd\n";
  for (const EvalRow& r : rows) {
    out << r.domain << ',' << r.sample << ',' << fmt(r.dsc) << ',';
    if (r.asd.has_value()) out << fmt(*r.asd);
    out << '\n';
  }
  out << '\n';
  out << "metric";
  for (const std::string& d : domains) out << ',' << d;
  out << ",avg\n";
  out << "dsc";
  for (const std::string& d : domains) out << ',' << fmt(domain_dsc(d));
  out << ',' << fmt(avg_dsc()) << '\n';
  out << "asd";
  for (const std::string& d : domains) {
    out << ',';
    const auto a = domain_asd(d);
    if (a.has_value()) out << fmt(*a);
  }
  out << ',';
  const auto overall = avg_asd();
  if (overall.has_value()) out << fmt(*overall);
  out << '\n';
  if (asd_excluded > 0) out << "# asd_excluded=" << asd_excluded << '\n';
  return out.str();
}

EvalReport evaluate_mask_dirs(const std::string& pred_dir, const std::string& gt_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(gt_dir)) throw IoError("not a directory: " + gt_dir);
  if (!fs::is_directory(pred_dir)) throw IoError("not a directory: " + pred_dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(gt_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      names.push_back(entry.path().filename().string());
    }
  }
  if (names.empty()) throw IoError("no .pgm masks found in " + gt_dir);
  std::sort(names.begin(), names.end());
  EvalReport report;
  for (const std::string& name : names) {
    const fs::path pred_path = fs::path(pred_dir) / name;
    if (!fs::exists(pred_path)) {
      throw IoError("missing prediction for " + name + " in " + pred_dir);
    }
    Tensor<double> gt = load_pgm((fs::path(gt_dir) / name).string());
    Tensor<double> pred = load_pgm(pred_path.string());
    if (gt.shape != pred.shape) {
      throw ShapeError("evaluate_mask_dirs: size mismatch for " + name + ": " +
                       shape_str(pred.shape) + " vs " + shape_str(gt.shape));
    }
    BinaryMask gm = mask_from_pm1(gt);
    BinaryMask pm = mask_from_pm1(pred);
    report.add("all", name, dsc(pm, gm), asd(pm, gm));
  }
  return report;
}

double GridReport::cell(const std::string& row_label, int held_out) const {
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    if (row_labels[r] != row_label) continue;
    for (std::size_t c = 0; c < domain_ids.size(); ++c) {
      if (domain_ids[c] == held_out) return dsc_cells[r][c];
    }
  }
  throw ValueError("GridReport: no cell (" + row_label + ", " +
                   std::to_string(held_out) + ")");
}

double GridReport::row_avg(const std::string& row_label) const {
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    if (row_labels[r] != row_label) continue;
    double sum = 0.0;
    for (double v : dsc_cells[r]) sum += v;
    return sum / static_cast<double>(dsc_cells[r].size());
  }
  throw ValueError("GridReport: unknown row " + row_label);
}

std::string GridReport::grid_csv() const {
  std::ostringstream out;
  out << row_header;
  for (int d : domain_ids) out << ",domain" << d;
  out << ",avg\n";
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out << row_labels[r];
    for (double v : dsc_cells[r]) out << ',' << fmt_cell(v);
    out << ',' << fmt_cell(row_avg(row_labels[r])) << '\n';
  }
  return out.str();
}

std::string GridReport::runs_csv() const {
  std::ostringstream out;
  out << row_header << ",held_out,seed,dsc,asd\n";
  for (const RunRecord& r : runs) {
    out << r.row_label << ',' << r.held_out << ',' << r.seed << ',' << fmt(r.dsc)
        << ',';
    if (r.asd.has_value()) out << fmt(*r.asd);
    out << '\n';
  }
  return out.str();
}

EvalReport train_and_eval(const TrainConfig& cfg,
                          const std::vector<DomainDataset>& domains) {
  auto [pool, test] = split_leave_one_out(domains, cfg.held_out);
  if (cfg.precision == 64) {
    TrainedModel<double> model = train<double>(cfg, pool);
    return evaluate_model(model.student, test);
  }
  TrainedModel<float> model = train<float>(cfg, pool);
  return evaluate_model(model.student, test);
}

namespace {

GridReport run_grid(const TrainConfig& base, const std::string& row_header,
                    const std::vector<std::string>& labels,
                    const std::function<void(TrainConfig&, std::size_t)>& apply_row) {
  base.validate();
  const std::vector<DomainDataset> bench = generate_benchmark(
      default_domains(base.domains), base.per_domain, base.data_seed, base.image_size);
  GridReport grid;
  grid.row_header = row_header;
  grid.row_labels = labels;
  for (const DomainDataset& d : bench) grid.domain_ids.push_back(d.spec.domain_id);
  grid.dsc_cells.assign(labels.size(),
                        std::vector<double>(grid.domain_ids.size(), 0.0));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    for (std::size_t c = 0; c < grid.domain_ids.size(); ++c) {
      double sum = 0.0;
      for (int s = 0; s < base.ablation_seeds; ++s) {
        TrainConfig cfg = base;
        apply_row(cfg, r);
        cfg.held_out = grid.domain_ids[c];
        cfg.seed = base.seed + static_cast<std::uint64_t >(s);
        EvalReport report = train_and_eval(cfg, bench);
        RunRecord run;
        run.row_label = labels[r];
        run.held_out = cfg.held_out;
        run.seed = cfg.seed;
        run.dsc = report.avg_dsc();
        run.asd = report.avg_asd();
        grid.runs.push_back(run);
        sum += run.dsc;
      }
      grid.dsc_cells[r][c] = sum / static_cast<double>(base.ablation_seeds);
    }
  }
  return grid;
}

}  // namespace

GridReport run_ablation(const TrainConfig& cfg) {
  const std::vector<MethodVariant> variants = {MethodVariant::kErm, MethodVariant::kFda,
                                               MethodVariant::kFdaCon,
                                               MethodVariant::kFull};
  std::vector<std::string> labels;
  for (MethodVariant v : variants) labels.push_back(to_string(v));
  return run_grid(cfg, "variant", labels,
                  [&](TrainConfig& c, std::size_t r) { c.variant = variants[r]; });
}

GridReport run_sweep(const TrainConfig& cfg, const std::string& axis,
                     const std::vector<double>& values) {
  if (values.empty()) throw ValueError("run_sweep: empty value list");
  std::vector<std::string> labels;
  for (double v : values) labels.push_back(fmt_label(v));
  if (axis == "beta") {
    return run_grid(cfg, "beta_max", labels, [&](TrainConfig& c, std::size_t r) {
      c.variant = MethodVariant::kFull;
      c.beta_max = values[r];
    });
  }
  if (axis == "m") {
    return run_grid(cfg, "m", labels, [&](TrainConfig& c, std::size_t r) {
      c.variant = MethodVariant::kFull;
      c.m = values[r];
    });
  }
  throw ValueError("run_sweep: axis must be 'beta' or 'm', got '" + axis + "'");
}

GridReport run_sweep(const TrainConfig& cfg, const std::string& axis) {
  if (axis == "beta") return run_sweep(cfg, axis, {1.0, 10.0, 100.0, 200.0, 400.0});
  if (axis == "m") return run_sweep(cfg, axis, {0.9, 0.99, 0.995, 0.999});
  throw ValueError("run_sweep: axis must be 'beta' or 'm', got '" + axis + "'");
}

}  // namespace ugseg
