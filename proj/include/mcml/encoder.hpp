#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcml/diffmath.hpp"

namespace mcml::enc {

// Windowed-MLP token encoder: h_i = W2 tanh(W1 [E[x_{i-1}]; E[x_i]; E[x_{i+1}]] + b1) + b2
// with the zero padding embedding at sentence boundaries.
struct EncoderConfig {
    int vocab_size = 0;
    int d_e = 16;
    int d_h = 16;
};

// Slot names inside the ParamStore.
inline constexpr const char* kEmbedding = "enc.E";
inline constexpr const char* kW1 = "enc.W1";
inline constexpr const char* kB1 = "enc.b1";
inline constexpr const char* kW2 = "enc.W2";
inline constexpr const char* kB2 = "enc.b2";

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero,
// embedding row 1 (padding) zeroed; deterministic per seed.
void init_encoder(diff::ParamStore& params, const EncoderConfig& config, std::uint64_t seed);

EncoderConfig encoder_config(const diff::ParamStore& params);

// One contextual vector (dim d_h) per token; differentiable.
std::vector<diff::NodeId> encode(diff::Graph& g, std::span<const int> token_ids);

}  // namespace mcml::enc
