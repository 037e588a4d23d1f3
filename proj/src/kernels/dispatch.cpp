#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lab/errors.hpp"
#include "lab/kernels.hpp"

namespace lab::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

struct Selected {
  PropagateBatchFn fn;
  std::string name;
};

Selected select() {
  const char* env = std::getenv("LAB_KERNEL");
  std::string want = env ? env : "auto";
  if (want == "scalar") return {&propagate_batch_scalar, "scalar"};
  if (want == "avx2") {
    if (!cpu_has_avx2())
      throw ValidationError("LAB_KERNEL=avx2 but the CPU lacks AVX2");
    return {&propagate_batch_avx2, "avx2"};
  }
  if (want != "auto")
    throw ValidationError("unknown LAB_KERNEL value: " + want);
  if (cpu_has_avx2()) return {&propagate_batch_avx2, "avx2"};
  return {&propagate_batch_scalar, "scalar"};
}

const Selected& selected() {
  static const Selected s = select();
  return s;
}

}  // namespace

PropagateBatchFn active_kernel() { return selected().fn; }

std::string active_kernel_name() { return selected().name; }

}  // namespace lab::kernels
