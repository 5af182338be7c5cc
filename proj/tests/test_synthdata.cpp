#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ugseg/errors.hpp"
#include "ugseg/fft.hpp"
#include "ugseg/pgm.hpp"
#include "ugseg/synthdata.hpp"
#include "ugseg/tensor.hpp"

using namespace ugseg;

namespace {

double fg_fraction(const Tensor<double>& mask) {
  double s = 0.0;
  for (auto v : mask.data) s += v;
  return s / static_cast<double>(mask.numel());
}

bool bitwise_equal(const Tensor<double>& a, const Tensor<double>& b) {
  if (a.shape != b.shape) return false;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/// Mid-frequency log-amplitude profile of every image, summarized as the
/// least-squares slope of log amplitude against log |f|/N over the ring
/// |f|/N in [0.16, 0.49). The slope compares the *shape* of the profile, so
/// per-image brightness/contrast wobble cancels out and what remains is the
/// spectral decay rate — the axis on which the domain styles differ at mid
/// frequencies. Returns (mean, sample std) of the per-image slopes.
std::pair<double, double> mid_freq_profile(const std::vector<Sample>& samples) {
  std::vector<double> per_image;
  for (const Sample& s : samples) {
    auto [amp, phase] = decompose(fftshift(fft2d(s.image)));
    const std::int64_t h = amp.shape[1], w = amp.shape[2];
    const double n = static_cast<double>(h);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::int64_t count = 0;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double fy = static_cast<double>(y - h / 2) / n;
        const double fx = static_cast<double>(x - w / 2) / n;
        const double r = std::sqrt(fy * fy + fx * fx);
        if (r >= 0.16 && r < 0.49) {
          const double lx = std::log(r);
          const double ly = std::log(amp[y * w + x] + 1e-12);
          sx += lx;
          sy += ly;
          sxx += lx * lx;
          sxy += lx * ly;
          ++count;
        }
      }
    }
    const double cnt = static_cast<double>(count);
    per_image.push_back((cnt * sxy - sx * sy) / (cnt * sxx - sx * sx));
  }
  double mean = 0.0;
  for (double v : per_image) mean += v;
  mean /= static_cast<double>(per_image.size());
  double var = 0.0;
  for (double v : per_image) var += (v - mean) * (v - mean);
  var /= static_cast<double>(per_image.size() - 1);
  return {mean, std::sqrt(var)};
}

}  // namespace

TEST_SUITE("synthdata") {
  TEST_CASE("default domains: shared geometry, distinct styles, valid specs") {
    std::vector<DomainSpec> specs = default_domains(4);
    REQUIRE(specs.size() == 4);
    for (const DomainSpec& s : specs) {
      CHECK_NOTHROW(s.validate());
      // Geometry block identical to domain 1's.
      CHECK(s.ellipses_min == specs[0].ellipses_min);
      CHECK(s.ellipses_max == specs[0].ellipses_max);
      CHECK(s.radius_min_frac == specs[0].radius_min_frac);
      CHECK(s.radius_max_frac == specs[0].radius_max_frac);
      CHECK(s.soft_edge_frac == specs[0].soft_edge_frac);
      CHECK(s.base_level == specs[0].base_level);
      CHECK(s.noise_scale == specs[0].noise_scale);
      CHECK(s.noise_f_min_frac == specs[0].noise_f_min_frac);
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      CHECK(specs[i].domain_id == static_cast<int>(i) + 1);
      for (std::size_t j = i + 1; j < specs.size(); ++j) {
        const bool differs = specs[i].intensity_offset != specs[j].intensity_offset ||
                             specs[i].contrast_gain != specs[j].contrast_gain ||
                             specs[i].noise_exponent != specs[j].noise_exponent ||
                             specs[i].bias_amplitude != specs[j].bias_amplitude;
        CHECK(differs);
      }
    }
  }

  TEST_CASE("generation is bitwise deterministic in (spec, seed)") {
    std::vector<DomainSpec> specs = default_domains(4);
    auto a = generate_domain(specs[1], 3, 77, 32);
    auto b = generate_domain(specs[1], 3, 77, 32);
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(bitwise_equal(a[i].image, b[i].image));
      CHECK(bitwise_equal(a[i].mask, b[i].mask));
      CHECK(a[i].domain_id == 2);
      CHECK(a[i].sample_id == static_cast<int>(i));
    }
    auto c = generate_domain(specs[1], 3, 78, 32);
    bool all_same = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      all_same = all_same && bitwise_equal(a[i].image, c[i].image);
    }
    CHECK(!all_same);
  }

  TEST_CASE("masks depend on geometry stream only, never style") {
    std::vector<DomainSpec> specs = default_domains(4);
    DomainSpec restyled = specs[0];
    restyled.intensity_offset = specs[3].intensity_offset;
    restyled.contrast_gain = specs[3].contrast_gain;
    restyled.noise_exponent = specs[3].noise_exponent;
    restyled.bias_amplitude = specs[3].bias_amplitude;
    auto a = generate_domain(specs[0], 4, 5, 32);
    auto b = generate_domain(restyled, 4, 5, 32);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(bitwise_equal(a[i].mask, b[i].mask));  // same geometry
      CHECK(!bitwise_equal(a[i].image, b[i].image));  // different style
    }
  }

  TEST_CASE("sample invariants: range, binary mask, fg fraction bound") {
    std::vector<DomainSpec> specs = default_domains(4);
    for (const DomainSpec& spec : specs) {
      auto samples = generate_domain(spec, 30, 11, 32);
      for (const Sample& s : samples) {
        CHECK(s.image.shape == Shape{1, 32, 32});
        for (auto v : s.image.data) {
          CHECK(v >= -1.0);
          CHECK(v <= 1.0);
        }
        for (auto v : s.mask.data) CHECK((v == 0.0 || v == 1.0));
        const double f = fg_fraction(s.mask);
        CHECK(f >= 0.05);
        CHECK(f <= 0.6);
      }
    }
  }

  TEST_CASE("style separability: mid-frequency spectra differ across domains") {
    // The texture exponents live outside the amplitude-mixing window; the
    // mid-frequency profile statistic must separate every domain pair by
    // more than 3 pooled sample standard deviations.
    std::vector<DomainSpec> specs = default_domains(4);
    std::vector<std::pair<double, double>> profiles;
    for (const DomainSpec& spec : specs) {
      profiles.push_back(mid_freq_profile(generate_domain(spec, 12, 21, 64)));
    }
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      for (std::size_t j = i + 1; j < profiles.size(); ++j) {
        const double gap = std::abs(profiles[i].first - profiles[j].first);
        const double pooled = std::sqrt(
            0.5 * (profiles[i].second * profiles[i].second +
                   profiles[j].second * profiles[j].second));
        CHECK(gap > 3.0 * pooled);
      }
    }
  }

  TEST_CASE("mask statistics are domain-invariant") {
    std::vector<DomainSpec> specs = default_domains(4);
    std::vector<double> mean_fg;
    for (const DomainSpec& spec : specs) {
      auto samples = generate_domain(spec, 24, 31, 32);
      double m = 0.0;
      for (const Sample& s : samples) m += fg_fraction(s.mask);
      mean_fg.push_back(m / static_cast<double>(samples.size()));
    }
    // Same geometry distribution (not same draws): means agree loosely.
    for (double m : mean_fg) {
      CHECK(m > 0.10);
      CHECK(m < 0.55);
    }
  }

  TEST_CASE("split_leave_one_out partitions in stable order") {
    auto domains = generate_benchmark(default_domains(4), 3, 99, 32);
    REQUIRE(domains.size() == 4);
    auto [train, test] = split_leave_one_out(domains, 2);
    CHECK(train.size() == 9);
    CHECK(test.size() == 3);
    for (const Sample& s : test) CHECK(s.domain_id == 2);
    // Domain order then sample order.
    std::vector<std::pair<int, int>> order;
    for (const Sample& s : train) order.emplace_back(s.domain_id, s.sample_id);
    std::vector<std::pair<int, int>> want = {{1, 0}, {1, 1}, {1, 2}, {3, 0}, {3, 1},
                                             {3, 2}, {4, 0}, {4, 1}, {4, 2}};
    CHECK(order == want);
    // Partition: no leakage, union complete.
    std::set<std::pair<int, int>> seen;
    for (const Sample& s : train) seen.emplace(s.domain_id, s.sample_id);
    for (const Sample& s : test) {
      CHECK(seen.emplace(s.domain_id, s.sample_id).second);
    }
    CHECK(seen.size() == 12);
    CHECK_THROWS_AS((void)split_leave_one_out(domains, 0), ValueError);
    CHECK_THROWS_AS((void)split_leave_one_out(domains, 5), ValueError);
  }

  TEST_CASE("save/load round trip preserves masks exactly, images to 8 bits") {
    const std::string dir = "/tmp/ugseg_test_ds";
    std::filesystem::remove_all(dir);
    auto domains = generate_benchmark(default_domains(2), 2, 7, 32);
    save_dataset(domains, dir);
    CHECK(std::filesystem::exists(dir + "/manifest.tsv"));
    CHECK(std::filesystem::exists(dir + "/domain1/img0.pgm"));
    CHECK(std::filesystem::exists(dir + "/domain2/msk1.pgm"));

    auto back = load_dataset(dir);
    REQUIRE(back.size() == 2);
    for (std::size_t d = 0; d < 2; ++d) {
      REQUIRE(back[d].samples.size() == 2);
      for (std::size_t i = 0; i < 2; ++i) {
        const Sample& orig = domains[d].samples[i];
        const Sample& got = back[d].samples[i];
        CHECK(got.domain_id == orig.domain_id);
        CHECK(got.sample_id == orig.sample_id);
        CHECK(bitwise_equal(got.mask, orig.mask));  // binary survives 8 bits
        REQUIRE(got.image.shape == orig.image.shape);
        for (std::int64_t j = 0; j < orig.image.numel(); ++j) {
          // One 8-bit quantum = 2/255.
          CHECK(std::abs(got.image[j] - orig.image[j]) <= 1.0 / 255.0 + 1e-12);
        }
      }
    }
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("pgm round trip endpoints and quantization") {
    const std::string path = "/tmp/ugseg_test_endpoints.pgm";
    Tensor<double> t({1, 1, 3}, {-1.0, 0.0, 1.0});
    save_pgm(t, path, PgmRange::kMinusOneOne);
    Tensor<double> back = load_pgm(path);
    CHECK(back[0] == -1.0);
    CHECK(back[2] == 1.0);
    CHECK(std::abs(back[1]) < 0.005);  // byte 127 or 128

    // save(load(f)) is byte-identical for a valid P5 file.
    std::ifstream in1(path, std::ios::binary);
    const std::string bytes1((std::istreambuf_iterator<char>(in1)),
                             std::istreambuf_iterator<char>());
    save_pgm(load_pgm(path), path, PgmRange::kMinusOneOne);
    std::ifstream in2(path, std::ios::binary);
    const std::string bytes2((std::istreambuf_iterator<char>(in2)),
                             std::istreambuf_iterator<char>());
    CHECK(bytes1 == bytes2);
    std::remove(path.c_str());
  }

  TEST_CASE("spec validation rejects bad ranges") {
    auto reject = [](auto&& mutate) {
      DomainSpec s = default_domains(4)[0];
      mutate(s);
      CHECK_THROWS_AS(s.validate(), ValueError);
    };
    reject([](DomainSpec& s) { s.ellipses_min = 0; });
    reject([](DomainSpec& s) { s.ellipses_max = s.ellipses_min - 1; });
    reject([](DomainSpec& s) { s.radius_min_frac = 0.0; });
    reject([](DomainSpec& s) { s.radius_max_frac = s.radius_min_frac / 2.0; });
    reject([](DomainSpec& s) { s.base_level = 0.0; });
    reject([](DomainSpec& s) { s.noise_scale = -0.1; });
  }

  TEST_CASE("load_dataset propagates IoError for missing manifests") {
    CHECK_THROWS_AS((void)load_dataset("/tmp/ugseg_no_such_dataset_dir"), IoError);
  }
}
