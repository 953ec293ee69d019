#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace embexp {

/// 64-bit FNV-1a. Used for content hashes in manifests and for seed derivation;
/// the value is stable across platforms and compilers.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// Lower-case, zero-padded 16 digit hex rendering of a 64-bit hash.
std::string hex64(std::uint64_t value);

/// SplitMix64 finalizer over (a, b). Cheap, well-mixed child seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Seed for a named pipeline stage: hash(global seed, stage name).
std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage) noexcept;

/// Deterministic random source.
///
/// The standard distributions are implementation-defined, so every draw here
/// is derived from raw mt19937_64 output to keep results identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform(std::size_t n);

  /// Uniform integer in [lo, hi] (inclusive).
  int range(int lo, int hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double unit();

  bool bernoulli(double p) { return unit() < p; }

  /// Standard normal draw (Box-Muller on unit()).
  double normal();

  /// Index drawn proportionally to non-negative weights. Returns weights.size()
  /// when every weight is zero.
  std::size_t weighted(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform(i)]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[uniform(items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads and returns the results
/// in index order. Output is independent of `jobs`.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned jobs, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out(n);
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            out[i] = fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// "a", "a and b", "a, b and c".
std::string join_with_and(const std::vector<std::string>& items);
std::string join(const std::vector<std::string>& items, std::string_view sep);

/// Indefinite article for a noun: "a", "an", or "some" for mass and plural nouns.
std::string_view indefinite_article(std::string_view noun);

}  // namespace embexp
