#include "saga/value.hpp"

#include <charconv>

namespace saga {

namespace {

bool parse_index(std::string_view seg, std::size_t& out) {
    if (seg.empty()) return false;
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), v);
    if (ec != std::errc{} || ptr != seg.data() + seg.size()) return false;
    out = v;
    return true;
}

void flatten_into(const Value& node, const std::string& prefix,
                  std::vector<std::pair<std::string, Value>>& out) {
    if (node.is_object()) {
        for (const auto& [key, child] : node.items()) {
            flatten_into(child, prefix.empty() ? key : prefix + "." + key, out);
        }
    } else if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) {
            const std::string p = prefix.empty() ? std::to_string(i)
                                                 : prefix + "." + std::to_string(i);
            flatten_into(node[i], p, out);
        }
    } else {
        out.emplace_back(prefix, node);
    }
}

}  // namespace

std::optional<Value> value_at_path(const Value& root, std::string_view path) {
    const Value* cur = &root;
    std::string_view rest = path;
    while (!rest.empty()) {
        const auto dot = rest.find('.');
        const std::string_view seg = rest.substr(0, dot);
        rest = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
        if (seg.empty()) return std::nullopt;
        if (cur->is_object()) {
            const auto it = cur->find(std::string(seg));
            if (it == cur->end()) return std::nullopt;
            cur = &*it;
        } else if (cur->is_array()) {
            std::size_t idx = 0;
            if (!parse_index(seg, idx) || idx >= cur->size()) return std::nullopt;
            cur = &(*cur)[idx];
        } else {
            return std::nullopt;
        }
    }
    return *cur;
}

void collect_match_leaves(const Value& node, std::set<Value>& out) {
    if (node.is_object() || node.is_array()) {
        for (const auto& child : node) collect_match_leaves(child, out);
        return;
    }
    if (node.is_number()) {
        out.insert(node);
    } else if (node.is_string() && node.get_ref<const std::string&>().size() >= 3) {
        out.insert(node);
    }
}

std::vector<std::pair<std::string, Value>> flatten_leaves(const Value& node) {
    std::vector<std::pair<std::string, Value>> out;
    flatten_into(node, "", out);
    return out;
}

}  // namespace saga
