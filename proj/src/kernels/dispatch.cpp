#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "dirnet/kernels.hpp"

namespace dirnet::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "auto") return best_isa();
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "' (scalar|avx2|auto)");
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() noexcept { return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

namespace {

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("DIRNET_KERNEL")) {
    try {
      const Isa isa = parse_isa(env);
      if (isa_available(isa)) return isa;
    } catch (const std::invalid_argument&) {
    }
  }
  return best_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel '" + std::string(isa_name(isa)) + "' not supported on this CPU");
  }
  current().store(isa, std::memory_order_relaxed);
}

RowTerms row_terms(double offset, std::span<const double> log_weight, std::span<const double> log_y,
                   std::span<const std::uint8_t> include) {
  if (active_isa() == Isa::Avx2) return avx2::row_terms(offset, log_weight, log_y, include);
  return scalar::row_terms(offset, log_weight, log_y, include);
}

}  // namespace dirnet::kernels
