#pragma once

// Strict reader for flat JSON parameter objects. Internal to the library.

#include "rcaforge/errors.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rcaforge::detail {

class Params {
public:
    Params(const nlohmann::json& j, std::set<std::string> allowed) : j_(j.is_null() ? nlohmann::json::object() : j) {
        if (!j_.is_object()) throw SchemaError("parameters must be a JSON object");
        for (const auto& [key, value] : j_.items())
            if (!allowed.count(key)) throw SchemaError("unknown parameter '" + key + "'");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    bool is_null(const std::string& key) const { return j_.contains(key) && j_.at(key).is_null(); }

    template <class T>
    void get(const std::string& key, T& out) const {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw SchemaError("parameter '" + key + "' has the wrong type");
        }
    }

    template <class T>
    void get(const std::string& key, std::optional<T>& out) const {
        if (is_null(key)) {
            out.reset();
            return;
        }
        if (!has(key)) return;
        T value{};
        get(key, value);
        out = value;
    }

    /// Accepts a JSON array or a comma-separated string.
    void get_list(const std::string& key, std::vector<std::string>& out) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        std::vector<std::string> items;
        if (v.is_string()) {
            std::string cur;
            for (char c : v.get<std::string>() + ",") {
                if (c == ',') {
                    if (!cur.empty()) items.push_back(cur);
                    cur.clear();
                } else if (c != ' ') {
                    cur += c;
                }
            }
        } else if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_string()) throw SchemaError("parameter '" + key + "' must list strings");
                items.push_back(e.get<std::string>());
            }
        } else {
            throw SchemaError("parameter '" + key + "' must be a list");
        }
        out = std::move(items);
    }

private:
    nlohmann::json j_;
};

}  // namespace rcaforge::detail
