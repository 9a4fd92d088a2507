#include <cctype>
#include <string>

#include "emseg/sweep.hpp"

namespace emseg::sweep {

std::string normalize_name(std::string_view label) {
    std::string out;
    bool pending_sep = false;
    auto emit = [&](std::string_view piece) {
        if (pending_sep && !out.empty()) out += '_';
        pending_sep = false;
        out += piece;
    };
    for (char c : label) {
        const auto u = static_cast<unsigned char>(c);
        if (c == '%') {
            pending_sep = true;
            emit("percent");
            pending_sep = true;
        } else if (std::isalnum(u) && u < 0x80) {
            const char lower = static_cast<char>(std::tolower(u));
            emit(std::string_view(&lower, 1));
        } else {
            pending_sep = true;
        }
    }
    return out;
}

const Entry* Document::find(std::string_view name) const noexcept {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

Document parse_space(std::string_view text) {
    Document doc;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": expected 'name = expression'");
        std::string_view label = line.substr(first, eq - first);
        while (!label.empty() && std::isspace(static_cast<unsigned char>(label.back()))) label.remove_suffix(1);
        Entry entry;
        entry.label = std::string(label);
        entry.name = normalize_name(label);
        if (entry.name.empty())
            throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": empty hyperparameter name");
        try {
            entry.expr = parse_expr(line.substr(eq + 1));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SyntaxError) throw;
            throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + " (" + entry.label + "): " +
                                                    std::string(e.what()).substr(error_name(e.code()).size() + 2));
        }
        if (doc.find(entry.name))
            throw Error(ErrorCode::DuplicateName, "'" + entry.name + "' defined twice (line " + std::to_string(line_no) + ")");
        doc.entries.push_back(std::move(entry));
    }
    return doc;
}

std::string render_space(const Document& doc) {
    std::string out;
    for (const auto& e : doc.entries) out += e.label + " = " + render_expr(e.expr) + "\n";
    return out;
}

ConfigAssignment sample(const SearchSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    ConfigAssignment a;
    for (const auto& e : space.entries) a.entries.push_back({e.name, e.label, sample_expr(e.expr, rng)});
    return a;
}

std::optional<std::uint64_t> grid_size(const SearchSpace& space) {
    std::uint64_t total = 1;
    for (const auto& e : space.entries) {
        const auto c = cardinality(e.expr);
        if (!c) return std::nullopt;
        total *= *c;
    }
    return total;
}

GridIterator::GridIterator(const SearchSpace& space) : space_(&space) {
    for (const auto& e : space.entries) {
        values_.push_back(enumerate_values(e.expr));
        if (values_.back().empty()) done_ = true;
    }
    cursor_.assign(values_.size(), 0);
}

std::optional<ConfigAssignment> GridIterator::next() {
    if (done_) return std::nullopt;
    ConfigAssignment a;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const auto& e = space_->entries[i];
        a.entries.push_back({e.name, e.label, values_[i][cursor_[i]]});
    }
    std::size_t i = values_.size();
    for (;;) {
        if (i == 0) {
            done_ = true;
            break;
        }
        --i;
        if (++cursor_[i] < values_[i].size()) break;
        cursor_[i] = 0;
    }
    return a;
}

std::vector<MembershipIssue> validate(const ConfigAssignment& a, const SearchSpace& space) {
    std::vector<MembershipIssue> issues;
    for (const auto& e : a.entries) {
        if (e.expr.kind == Expr::Kind::NotSelected) continue;
        const Entry* s = space.find(e.name);
        if (!s) {
            issues.push_back({e.name, "not in the search space"});
            continue;
        }
        if (!is_member(e.expr, s->expr))
            issues.push_back({e.name, render_expr(e.expr) + " is not a member of " + render_expr(s->expr)});
    }
    return issues;
}

}  // namespace emseg::sweep
