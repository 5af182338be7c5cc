#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ugseg/adam.hpp"
#include "ugseg/checkpoint.hpp"
#include "ugseg/config.hpp"
#include "ugseg/counters.hpp"
#include "ugseg/fourier_aug.hpp"
#include "ugseg/losses.hpp"
#include "ugseg/metrics.hpp"
#include "ugseg/parallel.hpp"
#include "ugseg/segnet.hpp"
#include "ugseg/synthdata.hpp"
#include "ugseg/uncertainty.hpp"

namespace ugseg {

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainLogRow {
  std::int64_t epoch = 0;
  std::int64_t step = 0;  // within the epoch
  double dice = 0.0;
  double uce = 0.0;  // unweighted ce for erm/fda, uncertainty-weighted for full
  double con = 0.0;
  double beta_eff = 0.0;
  double total = 0.0;
};

/// "epoch,step,dice,uce,con,beta_eff,total" header plus one row per step.
std::string log_to_csv(const std::vector<TrainLogRow>& rows);

template <typename T>
struct TrainedModel {
  SegNetwork<T> student;
  SegNetwork<T> teacher;  // EMA-tracked for fda+con/full, the init clone otherwise
  std::vector<TrainLogRow> log;
  TrainConfig config;
};

namespace harness_detail {

// Substream labels; every random decision forks the root through a fixed
// (label, index) path, so streams never depend on evaluation order.
inline constexpr std::uint64_t kInitLabel = 101;
inline constexpr std::uint64_t kShuffleLabel = 102;
inline constexpr std::uint64_t kStepLabel = 103;
inline constexpr std::uint64_t kPairPurpose = 1;
inline constexpr std::uint64_t kAugPurpose = 2;
inline constexpr std::uint64_t kUncPurpose = 3;
inline constexpr std::uint64_t kStudentCleanPurpose = 4;
inline constexpr std::uint64_t kStudentAugPurpose = 5;

inline void shuffle_indices(std::vector<std::int64_t>& idx, Rng& rng) {
  for (std::int64_t i = static_cast<std::int64_t>(idx.size()) - 1; i > 0; --i) {
    const auto j = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(idx[i], idx[j < 0 ? 0 : (j > i ? i : j)]);
  }
}

// Cap on the global gradient L2 norm applied every step. The consistency
// term spikes on hard amplitude mixes (the ramped beta multiplies a KL whose
// targets can be confidently wrong right after a near-total style swap), and
// one such step can poison Adam's second-moment state for hundreds of steps.
// Clipping bounds the damage without changing well-behaved steps: task-loss
// gradients for this network sit well under the cap. 0 disables clipping.
inline constexpr double kMaxGradNorm = 10.0;

}  // namespace harness_detail

/// Scales all parameter gradients so their global L2 norm is at most
/// `max_norm` (no-op when the norm is already smaller or max_norm <= 0).
/// Returns the pre-clip norm.
template <typename T>
double clip_grad_norm(std::vector<std::pair<std::string, Var<T>>>& params,
                      double max_norm) {
  double sq = 0.0;
  for (auto& [name, p] : params) {
    for (const T& g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& [name, p] : params) {
      for (T& g : p->grad) g *= scale;
    }
  }
  return norm;
}

/// Trains one network on `pool` according to cfg (cfg.validate() is called
/// here). Step order: augmentation, teacher forward, uncertainty (full only),
/// student forwards, variant loss, backward, Adam, EMA (fda+con and full).
/// A non-finite loss aborts with a NumericError naming the offending batch.
template <typename T>
TrainedModel<T> train(const TrainConfig& cfg, const std::vector<Sample>& pool) {
  cfg.validate();
  if (pool.empty()) throw ValueError("train: empty training pool");
  const std::int64_t height = pool[0].image.shape[1];
  const std::int64_t width = pool[0].image.shape[2];
  for (const Sample& s : pool) {
    if (s.image.shape != pool[0].image.shape) {
      throw ShapeError("train: training pool mixes image shapes");
    }
  }
  Workers::set_count(cfg.threads);

  Rng root(cfg.seed);
  Rng init_rng = root.fork(harness_detail::kInitLabel);
  TrainedModel<T> out;
  out.config = cfg;
  out.student = SegNetwork<T>::init(init_rng, 1, cfg.dropout_rate);
  out.teacher = out.student.clone_as_teacher();
  AdamState<T> adam;
  const bool use_aug = cfg.variant >= MethodVariant::kFda;
  const bool use_con = cfg.variant >= MethodVariant::kFdaCon;
  const bool use_unc = cfg.variant >= MethodVariant::kFull;

  const std::int64_t n = static_cast<std::int64_t>(pool.size());
  std::vector<std::int64_t> order(pool.size());
  for (std::int64_t i = 0; i < n; ++i) order[i] = i;
  std::int64_t global_step = 0;

  for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double beta_eff =
        use_con ? beta_rampup(epoch, cfg.epochs, cfg.beta_max) : 0.0;
    Rng shuffle_rng = root.fork(harness_detail::kShuffleLabel)
                          .fork(static_cast<std::uint64_t>(epoch));
    harness_detail::shuffle_indices(order, shuffle_rng);

    for (std::int64_t start = 0, step = 0; start < n;
         start += cfg.batch_size, ++step, ++global_step) {
      const std::int64_t b = std::min<std::int64_t>(cfg.batch_size, n - start);
      auto sub = [&](std::uint64_t purpose) {
        return root.fork(harness_detail::kStepLabel)
            .fork(static_cast<std::uint64_t>(global_step))
            .fork(purpose);
      };

      Tensor<T> x = Tensor<T>::zeros({b, 1, height, width});
      Tensor<T> y = Tensor<T>::zeros({b, 1, height, width});
      const std::int64_t hw = height * width;
      for (std::int64_t k = 0; k < b; ++k) {
        const Sample& s = pool[order[start + k]];
        for (std::int64_t j = 0; j < hw; ++j) {
          x[k * hw + j] = static_cast<T>(s.image[j]);
          y[k * hw + j] = static_cast<T>(s.mask[j]);
        }
      }

      // Fourier augmentation: each item mixes with another batch item drawn
      // uniformly (self only in a degenerate size-1 batch), operating on the
      // original double images.
      Tensor<T> xhat;
      if (use_aug) {
        xhat = Tensor<T>::zeros({b, 1, height, width});
        Rng pair_rng = sub(harness_detail::kPairPurpose);
        std::vector<std::int64_t> partner(static_cast<std::size_t>(b));
        for (std::int64_t k = 0; k < b; ++k) {
          if (b == 1) {
            partner[k] = 0;
            continue;
          }
          auto j = static_cast<std::int64_t>(pair_rng.uniform() *
                                             static_cast<double>(b - 1));
          j = j < 0 ? 0 : (j >= b - 1 ? b - 2 : j);
          partner[k] = j >= k ? j + 1 : j;
        }
        Rng aug_base = sub(harness_detail::kAugPurpose);
        for (std::int64_t k = 0; k < b; ++k) {
          Rng aug_rng = aug_base.fork(static_cast<std::uint64_t>(k));
          Tensor<double> mixed = augment(pool[order[start + k]].image,
                                         pool[order[start + partner[k]]].image,
                                         aug_rng, cfg.alpha);
          for (std::int64_t j = 0; j < hw; ++j) {
            xhat[k * hw + j] = static_cast<T>(mixed[j]);
          }
        }
      }

      // Teacher signals (no gradients anywhere near the teacher).
      Tensor<T> g_xhat;
      UncertaintyMap<T> umap;
      if (use_con) {
        {
          NoGradGuard ng;
          Rng dummy(0);
          ++counters().teacher_forward;
          g_xhat = out.teacher.forward(xhat, /*stochastic=*/false, 0.0, dummy)->value;
        }
        if (use_unc) {
          Rng unc_rng = sub(harness_detail::kUncPurpose);
          umap = estimate_uncertainty(out.teacher, xhat, cfg.mc_passes, cfg.sigma,
                                      unc_rng)
                     .second;
        }
      }

      // Student forwards are deterministic (no dropout, no input noise): the
      // consistency perturbation is carried entirely by the amplitude-mixed
      // input x̂, and keeping dropout out of the student keeps the
      // beta-weighted KL from also penalizing dropout variance. Dropout stays
      // a teacher-side (MC uncertainty) mechanism.
      Rng sx_rng = sub(harness_detail::kStudentCleanPurpose);
      Var<T> f_x = out.student.forward(x, /*stochastic=*/false, 0.0, sx_rng);
      Var<T> f_xhat;
      if (use_aug) {
        Rng sxh_rng = sub(harness_detail::kStudentAugPurpose);
        f_xhat = out.student.forward(xhat, /*stochastic=*/false, 0.0, sxh_rng);
      }

      LossValue<T> loss;
      switch (cfg.variant) {
        case MethodVariant::kErm: loss = hybrid_seg_loss(f_x, y); break;
        case MethodVariant::kFda: {
          LossValue<T> a = hybrid_seg_loss(f_x, y);
          LossValue<T> bb = hybrid_seg_loss(f_xhat, y);
          loss.value = add(a.value, bb.value);
          loss.breakdown["dice"] = a.breakdown.at("dice") + bb.breakdown.at("dice");
          loss.breakdown["ce"] = a.breakdown.at("ce") + bb.breakdown.at("ce");
          break;
        }
        case MethodVariant::kFdaCon: {
          LossValue<T> a = hybrid_seg_loss(f_x, y);
          LossValue<T> bb = hybrid_seg_loss(f_xhat, y);
          LossValue<T> c = kl_consistency(f_x, g_xhat);
          loss.value = add(add(a.value, bb.value),
                           scale(c.value, static_cast<T>(beta_eff)));
          loss.breakdown["dice"] = a.breakdown.at("dice") + bb.breakdown.at("dice");
          loss.breakdown["ce"] = a.breakdown.at("ce") + bb.breakdown.at("ce");
          loss.breakdown["con"] = c.breakdown.at("con");
          break;
        }
        case MethodVariant::kFull:
          loss = overall_loss(f_x, f_xhat, g_xhat, y, umap, beta_eff);
          break;
      }

      const double total = loss.total();
      if (!std::isfinite(total)) {
        std::string ids;
        for (std::int64_t k = 0; k < b; ++k) {
          const Sample& s = pool[order[start + k]];
          ids += (k ? ", " : "") + std::to_string(s.domain_id) + "/" +
                 std::to_string(s.sample_id);
        }
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " step " + std::to_string(step) +
                           "; batch samples (domain/sample): [" + ids + "]");
      }

      backward(loss.value);
      const double gnorm =
          clip_grad_norm(out.student.params, harness_detail::kMaxGradNorm);
      if (std::getenv("UGSEG_DEBUG_GRADNORM") != nullptr) {
        std::fprintf(stderr, "gradnorm %lld %lld %.6g\n",
                     static_cast<long long>(epoch), static_cast<long long>(step),
                     gnorm);
      }
      adam_step(out.student.params, adam, cfg.learning_rate);
      if (use_con) ema_update(out.teacher, out.student, cfg.m);

      TrainLogRow row;
      row.epoch = epoch;
      row.step = step;
      row.dice = loss.breakdown.count("dice") ? loss.breakdown.at("dice") : 0.0;
      row.uce = loss.breakdown.count("uce")
                    ? loss.breakdown.at("uce")
                    : (loss.breakdown.count("ce") ? loss.breakdown.at("ce") : 0.0);
      row.con = loss.breakdown.count("con") ? loss.breakdown.at("con") : 0.0;
      row.beta_eff = beta_eff;
      row.total = total;
      out.log.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct EvalRow {
  std::string domain;  // "domain<k>" in model mode, group name in file mode
  std::string sample;
  double dsc = 0.0;
  std::optional<double> asd;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> domains;  // first-seen order
  int asd_excluded = 0;              // samples with an undefined ASD

  double domain_dsc(const std::string& domain) const;
  std::optional<double> domain_asd(const std::string& domain) const;
  double avg_dsc() const;                 // unweighted mean over domains
  std::optional<double> avg_asd() const;  // over domains with a defined mean

  /// Per-sample rows, then a per-domain summary block with an avg column.
  std::string to_csv() const;

  void add(const std::string& domain, const std::string& sample, double dsc_value,
           std::optional<double> asd_value);
};

/// Deterministic forward (no dropout, no noise) in mini-batches, then
/// threshold-0.5 masks against the ground truth.
template <typename T>
EvalReport evaluate_model(const SegNetwork<T>& net, const std::vector<Sample>& test,
                          std::int64_t eval_batch = 16) {
  if (test.empty()) throw ValueError("evaluate_model: empty test set");
  if (eval_batch < 1) throw ValueError("evaluate_model: eval_batch must be >= 1");
  NoGradGuard ng;
  EvalReport report;
  const std::int64_t n = static_cast<std::int64_t>(test.size());
  const std::int64_t height = test[0].image.shape[1];
  const std::int64_t width = test[0].image.shape[2];
  const std::int64_t hw = height * width;
  Rng dummy(0);
  for (std::int64_t start = 0; start < n; start += eval_batch) {
    const std::int64_t b = std::min<std::int64_t>(eval_batch, n - start);
    Tensor<T> x = Tensor<T>::zeros({b, 1, height, width});
    for (std::int64_t k = 0; k < b; ++k) {
      const Sample& s = test[start + k];
      if (s.image.shape != test[0].image.shape) {
        throw ShapeError("evaluate_model: test set mixes image shapes");
      }
      for (std::int64_t j = 0; j < hw; ++j) x[k * hw + j] = static_cast<T>(s.image[j]);
    }
    Tensor<T> pred = net.forward(x, /*stochastic=*/false, 0.0, dummy)->value;
    for (std::int64_t k = 0; k < b; ++k) {
      const Sample& s = test[start + k];
      Tensor<T> plane = Tensor<T>::zeros({height, width});
      for (std::int64_t j = 0; j < hw; ++j) plane[j] = pred[k * hw + j];
      BinaryMask pm = binarize(plane, 0.5);
      BinaryMask gm = binarize(s.mask, 0.5);
      report.add("domain" + std::to_string(s.domain_id), std::to_string(s.sample_id),
                 dsc(pm, gm), asd(pm, gm));
    }
  }
  return report;
}

/// File-mode evaluation: every *.pgm in gt_dir must have a same-named
/// prediction in pred_dir; pixels >= 0 (i.e. >= 128 in the 8-bit file) are
/// foreground.
EvalReport evaluate_mask_dirs(const std::string& pred_dir, const std::string& gt_dir);

// ---------------------------------------------------------------------------
// Ablations and sweeps
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string row_label;
  int held_out = 0;
  std::uint64_t seed = 0;
  double dsc = 0.0;
  std::optional<double> asd;
};

/// Rows x held-out-domains grid of seed-averaged DSC, plus an avg column —
/// the Table-3/4/5 shape.
struct GridReport {
  std::string row_header;               // "variant", "beta_max", or "m"
  std::vector<std::string> row_labels;  // row order
  std::vector<int> domain_ids;          // column order
  std::vector<std::vector<double>> dsc_cells;  // [row][domain]
  std::vector<RunRecord> runs;

  double cell(const std::string& row_label, int held_out) const;
  double row_avg(const std::string& row_label) const;
  std::string grid_csv() const;  // header: <row_header>,domain...,avg
  std::string runs_csv() const;  // row_label,held_out,seed,dsc,asd
};

/// Trains cfg on the leave-one-out split of `domains` and evaluates on the
/// held-out domain; precision picks the arithmetic type.
EvalReport train_and_eval(const TrainConfig& cfg,
                          const std::vector<DomainDataset>& domains);

/// The Table-3 ablation: {erm, fda, fda+con, full} x every fold x
/// cfg.ablation_seeds seeds over the in-memory benchmark from cfg's data
/// knobs.
GridReport run_ablation(const TrainConfig& cfg);

/// Sweeps beta_max over {1,10,100,200,400} or m over {0.9,0.99,0.995,0.999}
/// with the full variant (Tables 4-5). `axis` is "beta" or "m".
GridReport run_sweep(const TrainConfig& cfg, const std::string& axis);
GridReport run_sweep(const TrainConfig& cfg, const std::string& axis,
                     const std::vector<double>& values);

// ---------------------------------------------------------------------------
// Checkpoint convenience
// ---------------------------------------------------------------------------

template <typename T>
void save_network(const SegNetwork<T>& net, const std::string& path) {
  save_checkpoint(net.to_named_tensors(), path);
}

template <typename T>
void load_network(SegNetwork<T>& net, const std::string& path) {
  net.load_named_tensors(load_checkpoint(path));
}

}  // namespace ugseg
