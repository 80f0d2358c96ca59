#include "grvfl/model_io.hpp"

#include <fstream>

namespace grvfl {

namespace {

template <typename F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed model file: ") + e.what());
    }
}

void check_header(const nlohmann::json& j, std::string_view kind) {
    if (!j.is_object()) {
        throw SchemaError("not a model file (expected a JSON object)");
    }
    guarded([&] {
        if (j.value("format", std::string()) != "grvfl-model") {
            throw SchemaError("not a model file (missing format tag)");
        }
        const int version = j.value("version", -1);
        if (version != kModelSchemaVersion) {
            throw SchemaError("unsupported model schema version " + std::to_string(version) + " (expected " +
                              std::to_string(kModelSchemaVersion) + ")");
        }
        const auto found = j.value("kind", std::string());
        if (found != kind) {
            throw SchemaError("model kind is '" + found + "', expected '" + std::string(kind) + "'");
        }
        return 0;
    });
}

ClassOrder class_order_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<std::string>>();
    if (v.size() != 2 || v[0] == v[1]) {
        throw SchemaError("class_order must list two distinct labels");
    }
    return {v[0], v[1]};
}

}  // namespace

nlohmann::json to_json(const HyperParams& h) {
    return {{"c1", h.c1},         {"c2", h.c2},     {"c3", h.c3},
            {"theta1", h.theta1}, {"theta2", h.theta2}, {"rho", h.rho},
            {"h_a", h.h_a},       {"h_b", h.h_b},   {"sigma", h.sigma},
            {"activation", std::string(to_string(h.activation))}, {"ridge", h.ridge}};
}

HyperParams hyper_from_json(const nlohmann::json& j) {
    return guarded([&] {
        HyperParams h;
        h.c1 = j.at("c1").get<double>();
        h.c2 = j.at("c2").get<double>();
        h.c3 = j.at("c3").get<double>();
        h.theta1 = j.at("theta1").get<double>();
        h.theta2 = j.at("theta2").get<double>();
        h.rho = j.at("rho").get<double>();
        h.h_a = j.at("h_a").get<Index>();
        h.h_b = j.at("h_b").get<Index>();
        h.sigma = j.at("sigma").get<double>();
        h.activation = parse_activation(j.at("activation").get<std::string>());
        h.ridge = j.at("ridge").get<double>();
        return h;
    });
}

nlohmann::json to_json(const FeatureMapSpec& s) {
    return {{"inputs", s.inputs},
            {"hidden", s.hidden},
            {"activation", std::string(to_string(s.activation))},
            {"seed", s.seed}};
}

FeatureMapSpec feature_map_spec_from_json(const nlohmann::json& j) {
    return guarded([&] {
        FeatureMapSpec s;
        s.inputs = j.at("inputs").get<Index>();
        s.hidden = j.at("hidden").get<Index>();
        s.activation = parse_activation(j.at("activation").get<std::string>());
        s.seed = j.at("seed").get<std::uint64_t>();
        return s;
    });
}

nlohmann::json to_json(const GrvflMvModel& m) {
    const auto& d = m.diagnostics;
    return {{"format", "grvfl-model"},
            {"version", kModelSchemaVersion},
            {"kind", "grvflmv"},
            {"class_order", {m.class_order[0], m.class_order[1]}},
            {"hyper", to_json(m.hyper)},
            {"feature_maps", {{"view_a", to_json(m.map_a.spec)}, {"view_b", to_json(m.map_b.spec)}}},
            {"beta1", matrix_to_json(m.beta1)},
            {"beta2", matrix_to_json(m.beta2)},
            {"diagnostics",
             {{"ridge_a", d.ridge_a},
              {"ridge_b", d.ridge_b},
              {"residual", d.residual},
              {"condition_estimate", d.condition_estimate},
              {"inflated", d.inflated},
              {"inflation", d.inflation}}}};
}

GrvflMvModel grvflmv_from_json(const nlohmann::json& j) {
    check_header(j, "grvflmv");
    return guarded([&] {
        GrvflMvModel m;
        m.class_order = class_order_from_json(j.at("class_order"));
        m.hyper = hyper_from_json(j.at("hyper"));
        m.map_a = init_feature_map(feature_map_spec_from_json(j.at("feature_maps").at("view_a")));
        m.map_b = init_feature_map(feature_map_spec_from_json(j.at("feature_maps").at("view_b")));
        m.beta1 = matrix_from_json(j.at("beta1"));
        m.beta2 = matrix_from_json(j.at("beta2"));
        if (m.beta1.rows() != m.map_a.inputs() + m.map_a.hidden() || m.beta1.cols() != 2 ||
            m.beta2.rows() != m.map_b.inputs() + m.map_b.hidden() || m.beta2.cols() != 2) {
            throw SchemaError("output weight shapes do not match the stored feature maps");
        }
        if (const auto it = j.find("diagnostics"); it != j.end()) {
            m.diagnostics.ridge_a = it->value("ridge_a", 0.0);
            m.diagnostics.ridge_b = it->value("ridge_b", 0.0);
            m.diagnostics.residual = it->value("residual", 0.0);
            m.diagnostics.condition_estimate = it->value("condition_estimate", 0.0);
            m.diagnostics.inflated = it->value("inflated", false);
            m.diagnostics.inflation = it->value("inflation", 0.0);
        }
        return m;
    });
}

nlohmann::json to_json(const RvflModel& m) {
    return {{"format", "grvfl-model"},
            {"version", kModelSchemaVersion},
            {"kind", "rvfl"},
            {"class_order", {m.class_order[0], m.class_order[1]}},
            {"c", m.c},
            {"direct_links", m.direct_links},
            {"feature_map", to_json(m.feature_map.spec)},
            {"output_weights", matrix_to_json(m.output_weights)}};
}

RvflModel rvfl_from_json(const nlohmann::json& j) {
    check_header(j, "rvfl");
    return guarded([&] {
        RvflModel m;
        m.class_order = class_order_from_json(j.at("class_order"));
        m.c = j.at("c").get<double>();
        m.direct_links = j.at("direct_links").get<bool>();
        m.feature_map = init_feature_map(feature_map_spec_from_json(j.at("feature_map")));
        m.output_weights = matrix_from_json(j.at("output_weights"));
        const Index expected = m.feature_map.hidden() + (m.direct_links ? m.feature_map.inputs() : 0);
        if (m.output_weights.rows() != expected || m.output_weights.cols() != 2) {
            throw SchemaError("output weight shape does not match the stored feature map");
        }
        return m;
    });
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

}  // namespace grvfl
