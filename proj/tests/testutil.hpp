#pragma once

// Shared test helpers: random tensors and a central finite-difference
// gradient checker. The checker is oracle code: it only re-evaluates the
// forward closure and does plain arithmetic.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "aqqr/tensor.hpp"

namespace testutil {

/// Unique scratch file under the system temp dir, removed on destruction.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents = "") {
    static std::atomic<int> counter{0};
    path = (std::filesystem::temp_directory_path() /
            ("aqqr_test_" + std::to_string(counter++) + "_" +
             std::to_string(std::random_device{}()) + ".txt"))
               .string();
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("aqqr_dir_" + std::to_string(counter++) + "_" +
            std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

inline aqqr::Tensor random_tensor(aqqr::Shape shape, std::mt19937_64& rng, double lo = -2.0,
                                  double hi = 2.0, bool requires_grad = false) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return aqqr::Tensor::from_values(std::move(shape), std::move(v), requires_grad);
}

struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string detail;
};

/// Central finite differences vs analytic gradients for a scalar forward().
/// forward() must be deterministic and must read params by shared handle.
inline GradCheckResult check_gradients(const std::function<aqqr::Tensor()>& forward,
                                       std::vector<aqqr::Tensor> params, double tol = 1e-3,
                                       double h = 1e-5) {
  GradCheckResult res;
  aqqr::Tape::active().reset();
  for (auto& p : params) p.zero_grad();
  aqqr::Tensor loss = forward();
  aqqr::backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(p.grad());

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& vals = params[pi].values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double x0 = vals[k];
      vals[k] = x0 + h;
      aqqr::Tape::active().reset();
      const double lp = forward().value();
      vals[k] = x0 - h;
      aqqr::Tape::active().reset();
      const double lm = forward().value();
      vals[k] = x0;
      const double fd = (lp - lm) / (2.0 * h);
      const double a = analytic[pi][k];
      const double denom = std::max(std::abs(a), std::abs(fd));
      double rel;
      if (denom < 1e-6) {
        rel = std::abs(a - fd) < 1e-6 ? 0.0 : 1.0;
      } else {
        rel = std::abs(a - fd) / denom;
      }
      if (rel > res.worst_rel) res.worst_rel = rel;
      if (rel > tol) {
        res.ok = false;
        res.detail = "param " + std::to_string(pi) + " elem " + std::to_string(k) +
                     ": analytic " + std::to_string(a) + " vs fd " + std::to_string(fd);
        aqqr::Tape::active().reset();
        return res;
      }
    }
  }
  aqqr::Tape::active().reset();
  return res;
}

}  // namespace testutil
