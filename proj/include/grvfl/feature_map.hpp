#pragma once

#include "grvfl/common.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace grvfl {

enum class Activation { sigmoid, relu, tanh };

std::string_view to_string(Activation a);
/// Accepts "sigmoid", "relu", "tanh".
Activation parse_activation(std::string_view name);

double activation_apply(double x, Activation a);

/// Everything needed to regenerate a random enhancement layer.
struct FeatureMapSpec {
    Index inputs = 0;  ///< p
    Index hidden = 0;  ///< h
    Activation activation = Activation::sigmoid;
    std::uint64_t seed = 0;

    bool operator==(const FeatureMapSpec&) const = default;
};

/// Fixed random input-to-hidden weights of an RVFL-style network.
struct FeatureMapParams {
    FeatureMapSpec spec;
    Matrix weights;  ///< p x h, U[-1, 1)
    Vector bias;     ///< h, U[-1, 1); shared by every sample

    Index inputs() const { return spec.inputs; }
    Index hidden() const { return spec.hidden; }
};

/// [X | phi(X W + 1 b^t)] together with the map that produced it.
struct EnhancedMatrix {
    Matrix z;
    FeatureMapSpec provenance;
};

/// Draws W in row-major order (all h weights of input 0, then input 1, ...)
/// followed by the h biases, all from one Rng seeded with `seed`.
FeatureMapParams init_feature_map(Index p, Index h, Activation activation, std::uint64_t seed);
FeatureMapParams init_feature_map(const FeatureMapSpec& spec);

/// Hidden activations phi(X W + 1 b^t) only.
Matrix hidden_layer(const Matrix& x, const FeatureMapParams& params);

EnhancedMatrix enhance(const Matrix& x, const FeatureMapParams& params);

}  // namespace grvfl
