#include "grvfl/feature_map.hpp"

#include "grvfl/rng.hpp"

#include <algorithm>
#include <cmath>

namespace grvfl {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    return "sigmoid";
}

Activation parse_activation(std::string_view name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

double activation_apply(double x, Activation a) {
    switch (a) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::relu: return std::max(0.0, x);
        case Activation::tanh: return std::tanh(x);
    }
    return x;
}

FeatureMapParams init_feature_map(Index p, Index h, Activation activation, std::uint64_t seed) {
    return init_feature_map(FeatureMapSpec{p, h, activation, seed});
}

FeatureMapParams init_feature_map(const FeatureMapSpec& spec) {
    if (spec.inputs < 1 || spec.hidden < 1) {
        throw InvalidArgument("feature map needs p >= 1 and h >= 1 (got p = " + std::to_string(spec.inputs) +
                              ", h = " + std::to_string(spec.hidden) + ")");
    }
    FeatureMapParams params;
    params.spec = spec;
    params.weights.resize(spec.inputs, spec.hidden);
    params.bias.resize(spec.hidden);
    Rng rng(spec.seed);
    for (Index i = 0; i < spec.inputs; ++i) {
        for (Index j = 0; j < spec.hidden; ++j) {
            params.weights(i, j) = rng.uniform(-1.0, 1.0);
        }
    }
    for (Index j = 0; j < spec.hidden; ++j) {
        params.bias(j) = rng.uniform(-1.0, 1.0);
    }
    return params;
}

Matrix hidden_layer(const Matrix& x, const FeatureMapParams& params) {
    if (x.cols() != params.inputs()) {
        throw DimensionError("feature map expects " + std::to_string(params.inputs()) + " input columns, got " +
                             std::to_string(x.cols()));
    }
    Matrix pre = x * params.weights;
    pre.rowwise() += params.bias.transpose();
    const Activation act = params.spec.activation;
    return pre.unaryExpr([act](double v) { return activation_apply(v, act); });
}

EnhancedMatrix enhance(const Matrix& x, const FeatureMapParams& params) {
    Matrix hidden = hidden_layer(x, params);
    EnhancedMatrix out;
    out.provenance = params.spec;
    out.z.resize(x.rows(), x.cols() + hidden.cols());
    out.z.leftCols(x.cols()) = x;
    out.z.rightCols(hidden.cols()) = hidden;
    return out;
}

}  // namespace grvfl
