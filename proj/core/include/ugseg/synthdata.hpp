#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ugseg/rng.hpp"
#include "ugseg/tensor.hpp"

namespace ugseg {

/// One synthetic "scanner": style parameters differ across domains, the
/// geometry (and noise plumbing) parameters never do — semantics are
/// domain-invariant, style is not.
struct DomainSpec {
  int domain_id = 1;

  // Style axes (vary across domains).
  double intensity_offset = 0.0;  // added to the rendered structure
  double contrast_gain = 1.0;     // multiplies the fg/bg structure
  double noise_exponent = 2.4;    // texture power spectrum ~ 1/f^exponent
  double bias_amplitude = 0.1;    // multiplicative smooth field 1 + a*b

  // Geometry and rendering constants (identical for every domain).
  int ellipses_min = 2;
  int ellipses_max = 3;
  double radius_min_frac = 0.18;  // of image side
  double radius_max_frac = 0.36;
  double soft_edge_frac = 0.03;  // logistic edge width, fraction of side
  double base_level = 0.25;        // fg = +base, bg = -base before styling
  double noise_scale = 0.05;       // std of the colored-noise field
  double noise_f_min_frac = 0.1406;  // texture support starts at this * side
  // Structure+bias spectra are band-stopped on |f|/side in [lo, hi] (with
  // raised-cosine skirts) before the noise is added, keeping every image
  // spectrally quiet across the amplitude-mixing window's asymmetry band.
  double notch_lo_frac = 0.090;
  double notch_hi_frac = 0.139;
  double notch_skirt_frac = 0.015;

  void validate() const;
};

struct Sample {
  Tensor<double> image;  // [1,H,W] in [-1,1]
  Tensor<double> mask;   // [1,H,W] in {0,1}
  int domain_id = 0;
  int sample_id = 0;
};

struct DomainDataset {
  DomainSpec spec;
  std::vector<Sample> samples;
};

/// The checked-in default 4-domain benchmark styles.
std::vector<DomainSpec> default_domains(int k = 4);

/// Deterministically renders n samples; sample i depends only on
/// (spec, seed, i), and its mask only on (domain_id, seed, i) — styles
/// never move geometry.
std::vector<Sample> generate_domain(const DomainSpec& spec, int n, std::uint64_t seed,
                                    std::int64_t size = 64);

std::vector<DomainDataset> generate_benchmark(const std::vector<DomainSpec>& specs,
                                              int per_domain, std::uint64_t seed,
                                              std::int64_t size = 64);

/// train pool = every sample of the other domains (domain order, then
/// sample order); test set = the held-out domain, untouched.
std::pair<std::vector<Sample>, std::vector<Sample>> split_leave_one_out(
    const std::vector<DomainDataset>& domains, int held_out);

/// Writes domain{k}/img{i}.pgm + domain{k}/msk{i}.pgm + manifest.tsv
/// (domain-id, sample-id, image path, mask path — tab separated).
void save_dataset(const std::vector<DomainDataset>& domains, const std::string& dir);

/// Reads a dataset back through its manifest (paths relative to dir).
std::vector<DomainDataset> load_dataset(const std::string& dir);

}  // namespace ugseg
