#pragma once

// JSON records for descriptors, weights, configurations and reports.

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "errors.hpp"
#include "group.hpp"
#include "invariant_net.hpp"
#include "relaxed.hpp"

namespace symforge {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Descriptors (index sets are 1-based on disk)

inline json index_set_json(const std::vector<int>& I) {
    json a = json::array();
    for (int i : I) a.push_back(i + 1);
    return a;
}

inline std::vector<int> index_set_from_json(const json& a) {
    if (!a.is_array()) throw parse_error("index_set must be an array", 0);
    std::vector<int> I;
    for (const auto& v : a) {
        if (!v.is_number_integer()) throw parse_error("index_set entries must be integers", 0);
        I.push_back(v.get<int>() - 1);
    }
    return I;
}

inline json to_json(const group_descriptor& G) {
    json j;
    j["kind"] = std::string(to_string(G.kind()));
    j["n"] = G.n();
    if (G.kind() == group_kind::product) {
        json comps = json::array();
        for (const auto& c : G.components())
            comps.push_back({{"kind", std::string(to_string(c.kind))}, {"index_set", index_set_json(c.index_set)}});
        j["components"] = comps;
    } else {
        j["index_set"] = index_set_json(G.index_set());
    }
    return j;
}

inline group_descriptor descriptor_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j.contains("n"))
        throw parse_error("descriptor needs 'kind' and 'n'", 0);
    const auto kind = group_kind_from_string(j.at("kind").get<std::string>());
    const auto n = j.at("n").get<std::size_t>();
    if (kind == group_kind::product) {
        std::vector<local_group> comps;
        for (const auto& c : j.at("components"))
            comps.push_back({group_kind_from_string(c.at("kind").get<std::string>()),
                             index_set_from_json(c.at("index_set"))});
        return group_descriptor::product(std::move(comps), n);
    }
    return group_descriptor::local(kind, index_set_from_json(j.at("index_set")), n);
}

// ---------------------------------------------------------------------------
// Enumerations

inline std::string to_string(loss_kind k) { return k == loss_kind::squared ? "squared" : "absolute"; }
inline std::string to_string(optimizer_kind k) { return k == optimizer_kind::sgd ? "sgd" : "adam"; }
inline std::string to_string(pooling_kind k) { return k == pooling_kind::sum_all ? "sum_all" : "mean_selected"; }
inline std::string to_string(reward_kind k) { return k == reward_kind::clamped ? "clamped" : "log_ratio"; }
inline std::string to_string(reward_source k) { return k == reward_source::train ? "train" : "validation"; }
inline std::string to_string(recommendation k) {
    return k == recommendation::posterior_mean ? "posterior_mean" : "empirical_play";
}

namespace detail {

template <typename E, std::size_t N>
E enum_from(const std::string& s, const char* what, const std::pair<const char*, E> (&table)[N]) {
    std::string valid;
    for (const auto& [name, v] : table) {
        if (s == name) return v;
        valid += (valid.empty() ? "" : ", ") + std::string(name);
    }
    throw parse_error(std::string("unknown ") + what + " '" + s + "' (valid: " + valid + ")", 0);
}

}  // namespace detail

inline loss_kind loss_kind_from(const std::string& s) {
    static const std::pair<const char*, loss_kind> t[] = {{"squared", loss_kind::squared},
                                                          {"absolute", loss_kind::absolute}};
    return detail::enum_from(s, "loss", t);
}
inline optimizer_kind optimizer_from(const std::string& s) {
    static const std::pair<const char*, optimizer_kind> t[] = {{"sgd", optimizer_kind::sgd},
                                                               {"adam", optimizer_kind::adam}};
    return detail::enum_from(s, "optimizer", t);
}
inline pooling_kind pooling_from(const std::string& s) {
    static const std::pair<const char*, pooling_kind> t[] = {{"sum_all", pooling_kind::sum_all},
                                                             {"mean_selected", pooling_kind::mean_selected}};
    return detail::enum_from(s, "pooling", t);
}
inline reward_kind reward_kind_from(const std::string& s) {
    static const std::pair<const char*, reward_kind> t[] = {{"clamped", reward_kind::clamped},
                                                            {"log_ratio", reward_kind::log_ratio}};
    return detail::enum_from(s, "reward", t);
}
inline reward_source reward_source_from(const std::string& s) {
    static const std::pair<const char*, reward_source> t[] = {{"train", reward_source::train},
                                                              {"validation", reward_source::validation}};
    return detail::enum_from(s, "reward_source", t);
}

inline recommendation recommendation_from(const std::string& s) {
    static const std::pair<const char*, recommendation> t[] = {{"posterior_mean", recommendation::posterior_mean},
                                                               {"empirical_play", recommendation::empirical_play}};
    return detail::enum_from(s, "recommend", t);
}

// ---------------------------------------------------------------------------
// Weights

inline json to_json(const phi_params& p) {
    return {{"n", p.arch.n}, {"p", p.arch.p}, {"h", p.arch.h}, {"pooling", to_string(p.arch.pooling)},
            {"values", p.values}};
}

inline phi_params phi_params_from_json(const json& j) {
    phi_architecture a;
    a.n = j.at("n").get<std::size_t>();
    a.p = j.at("p").get<std::size_t>();
    a.h = j.at("h").get<std::size_t>();
    a.pooling = pooling_from(j.at("pooling").get<std::string>());
    phi_params p(a);
    auto values = j.at("values").get<vec>();
    if (values.size() != p.size())
        throw parse_error("phi weights: expected " + std::to_string(p.size()) + " values, got " +
                              std::to_string(values.size()),
                          0);
    p.values = std::move(values);
    return p;
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw error("cannot open '" + path + "'");
    try {
        return json::parse(is, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw parse_error(path + ": " + e.what(), 0);
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot open '" + path + "' for writing");
    os << text;
    if (!os) throw error("write failed for '" + path + "'");
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// FNV-1a over the bytes of `s`, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Throws if `j` has keys outside `allowed`.
inline void require_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw parse_error(std::string("section '") + section + "' must be an object", 0);
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!ok.count(key)) throw parse_error(std::string("unknown key '") + key + "' in section '" + section + "'", 0);
    }
}

}  // namespace symforge
