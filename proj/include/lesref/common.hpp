#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lesref {

// Bad inputs, configs, manifests. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A stored artifact failed its checksum.
class CorruptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
std::string to_hex(uint64_t v);

}  // namespace lesref
