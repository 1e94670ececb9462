#include "mmlatent/dtype.hpp"

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {
Dtype g_default_dtype = Dtype::f32;
}

Dtype default_dtype() { return g_default_dtype; }

void set_default_dtype(Dtype dt) { g_default_dtype = dt; }

const char* dtype_name(Dtype dt) { return dt == Dtype::f32 ? "f32" : "f64"; }

Dtype dtype_from_name(const std::string& name) {
    if (name == "f32") return Dtype::f32;
    if (name == "f64") return Dtype::f64;
    throw ConfigError("unknown dtype name: '" + name + "' (expected f32 or f64)");
}

std::size_t dtype_byte_size(Dtype dt) { return dt == Dtype::f32 ? 4 : 8; }

}  // namespace mmlatent
