#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace tabprobe {

// UTF-8 decoding for character-level (not byte-level) string distances.
// Invalid bytes are passed through as single code points.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<char32_t>& cps);

std::string trim(std::string_view s);
std::string trim_right(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// First line of a (possibly multi-line) model response, trailing whitespace removed.
std::string first_line(std::string_view s);

// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view data);

// Stable seed derivation for independent RNG streams.
uint64_t derive_seed(uint64_t seed, std::string_view stream);
std::mt19937_64 make_rng(uint64_t seed, std::string_view stream = "");

// Runs f(i) for i in [0, n) on up to `workers` threads. Exceptions are
// rethrown on the caller thread. Results must be written into
// index-addressed storage by the callee so order stays deterministic.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& f);

// Fixed-point rendering with the given number of decimal places.
std::string format_fixed(double value, int decimal_places);

}  // namespace tabprobe
