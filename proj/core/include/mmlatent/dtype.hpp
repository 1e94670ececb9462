#pragma once

#include <cstddef>
#include <string>

namespace mmlatent {

/// Run-wide numeric precision. f32 is the training default; f64 gives the
/// headroom gradient-check suites need. Buffers are held as doubles either
/// way; in f32 mode every stored value is rounded through float so the buffer
/// contents are exactly float-representable and serialize losslessly to
/// 4-byte IEEE-754.
enum class Dtype { f32, f64 };

Dtype default_dtype();
void set_default_dtype(Dtype dt);

const char* dtype_name(Dtype dt);
Dtype dtype_from_name(const std::string& name);
std::size_t dtype_byte_size(Dtype dt);

inline double quantize(double v, Dtype dt) {
    return dt == Dtype::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

/// RAII switch used by tests that need a specific precision.
class DtypeGuard {
  public:
    explicit DtypeGuard(Dtype dt) : saved_(default_dtype()) { set_default_dtype(dt); }
    ~DtypeGuard() { set_default_dtype(saved_); }
    DtypeGuard(const DtypeGuard&) = delete;
    DtypeGuard& operator=(const DtypeGuard&) = delete;

  private:
    Dtype saved_;
};

}  // namespace mmlatent
