#include "snape/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "snape/errors.hpp"

namespace snape {

int Factor::total_order() const {
    int s = 0;
    for (const auto& [axis, order] : derivative) {
        s += order;
    }
    return s;
}

std::vector<std::string> ModelSpec::coefficient_names() const {
    std::vector<std::string> out;
    out.reserve(free_terms.size());
    for (const auto& t : free_terms) {
        out.push_back(*t.free_name);
    }
    return out;
}

std::vector<int> ModelSpec::max_derivative(const std::vector<std::string>& axis_order) const {
    std::vector<int> out(axis_order.size(), 0);
    auto visit = [&](const Term& t) {
        for (const auto& f : t.factors) {
            for (const auto& [axis, order] : f.derivative) {
                const auto it = std::find(axis_order.begin(), axis_order.end(), axis);
                if (it == axis_order.end()) {
                    throw MismatchError("model axis '" + axis + "' is not a grid axis");
                }
                auto& slot = out[static_cast<std::size_t>(it - axis_order.begin())];
                slot = std::max(slot, order);
            }
        }
    };
    visit(anchor);
    std::for_each(fixed_terms.begin(), fixed_terms.end(), visit);
    std::for_each(free_terms.begin(), free_terms.end(), visit);
    return out;
}

bool ModelSpec::is_nonlinear() const {
    // a term is nonlinear when more than one factor depends on beta
    auto nl = [](const Term& t) {
        return std::count_if(t.factors.begin(), t.factors.end(), [](const Factor& f) { return !f.exogenous; }) > 1;
    };
    return nl(anchor) || std::any_of(fixed_terms.begin(), fixed_terms.end(), nl) ||
           std::any_of(free_terms.begin(), free_terms.end(), nl);
}

namespace {

struct RawFactor {
    std::string name;
    std::vector<std::pair<std::string, int>> derivative;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct RawTerm {
    enum class Kind { Anchor, Free, Fixed } kind = Kind::Anchor;
    std::string name;
    double value = 1.0;
    std::vector<RawFactor> factors;
    std::size_t line = 0;
    std::size_t column = 0;
};

class LineCursor {
public:
    LineCursor(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, pos_ + 1); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t col) const { throw ParseError(msg, line_, col); }

    std::size_t column() const { return pos_ + 1; }
    std::size_t line() const { return line_; }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    bool peek(char c) {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    std::string identifier() {
        skip_space();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
        }
        if (pos_ == start) {
            fail("expected an identifier");
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    double real() {
        skip_space();
        const std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
            ++pos_;
        }
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '.' ||
                                       ((text_[pos_] == '-' || text_[pos_] == '+') &&
                                        (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
            ++pos_;
        }
        std::string_view tok = text_.substr(start, pos_ - start);
        if (!tok.empty() && tok.front() == '+') {
            tok.remove_prefix(1);
        }
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
            pos_ = start;
            fail("expected a real number");
        }
        return v;
    }

    int integer() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
        int v = 0;
        const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (pos_ == start || res.ec != std::errc()) {
            pos_ = start;
            fail("expected a nonnegative integer");
        }
        return v;
    }

    std::string_view rest() {
        skip_space();
        return text_.substr(pos_);
    }

private:
    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

RawFactor parse_factor(LineCursor& cur) {
    RawFactor f;
    cur.skip_space();
    f.line = cur.line();
    f.column = cur.column();
    const std::string id = cur.identifier();
    if (id == "D" && cur.peek('(')) {
        cur.expect('(');
        f.name = cur.identifier();
        do {
            cur.expect(',');
            std::string axis = cur.identifier();
            cur.expect(',');
            const int order = cur.integer();
            f.derivative.emplace_back(std::move(axis), order);
        } while (!cur.peek(')'));
        cur.expect(')');
    } else {
        f.name = id;
    }
    return f;
}

std::vector<RawFactor> parse_product(LineCursor& cur) {
    std::vector<RawFactor> out;
    out.push_back(parse_factor(cur));
    while (cur.accept('*')) {
        out.push_back(parse_factor(cur));
    }
    return out;
}

std::vector<std::string> parse_name_list(LineCursor& cur) {
    std::vector<std::string> names;
    names.push_back(cur.identifier());
    while (cur.accept(',')) {
        names.push_back(cur.identifier());
    }
    return names;
}

}  // namespace

ModelSpec parse_model(std::string_view text) {
    ModelSpec model;
    model.source = std::string(text);

    std::optional<std::vector<std::string>> axes;
    std::optional<std::string> target;
    std::vector<std::string> exogenous;
    std::vector<RawTerm> raw_terms;
    std::optional<std::pair<std::string, std::pair<std::size_t, std::size_t>>> forcing;
    bool have_anchor = false;

    std::size_t line_no = 0;
    std::size_t last_content = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) {
            line.remove_suffix(1);
        }
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        last_content = line_no;
        if (line.back() != ';') {
            throw ParseError("statement must end with ';'", line_no, line.size() + 1);
        }
        LineCursor cur(line.substr(0, line.size() - 1), line_no);
        cur.skip_space();
        const std::size_t kw_col = cur.column();
        const std::string keyword = cur.identifier();

        if (keyword == "axes") {
            if (axes) {
                cur.fail_at("axes declared twice", kw_col);
            }
            axes = parse_name_list(cur);
            std::set<std::string> uniq(axes->begin(), axes->end());
            if (uniq.size() != axes->size()) {
                cur.fail_at("duplicate axis name", kw_col);
            }
        } else if (keyword == "field") {
            if (target) {
                cur.fail_at("exactly one target field may be declared", kw_col);
            }
            target = cur.identifier();
        } else if (keyword == "exogenous") {
            for (auto& n : parse_name_list(cur)) {
                if (std::find(exogenous.begin(), exogenous.end(), n) != exogenous.end()) {
                    cur.fail_at("exogenous field '" + n + "' declared twice", kw_col);
                }
                exogenous.push_back(std::move(n));
            }
        } else if (keyword == "anchor") {
            if (have_anchor) {
                cur.fail_at("exactly one anchor term may be declared", kw_col);
            }
            have_anchor = true;
            RawTerm t;
            t.kind = RawTerm::Kind::Anchor;
            t.line = line_no;
            t.column = kw_col;
            t.factors = parse_product(cur);
            raw_terms.push_back(std::move(t));
        } else if (keyword == "term" || keyword == "fixedterm") {
            RawTerm t;
            t.line = line_no;
            t.column = kw_col;
            if (keyword == "term") {
                t.kind = RawTerm::Kind::Free;
                t.name = cur.identifier();
                cur.expect(':');
                t.value = cur.accept('-') ? -1.0 : 1.0;
            } else {
                t.kind = RawTerm::Kind::Fixed;
                t.value = cur.real();
                cur.expect(':');
            }
            t.factors = parse_product(cur);
            raw_terms.push_back(std::move(t));
        } else if (keyword == "forcing") {
            if (forcing) {
                cur.fail_at("forcing declared twice", kw_col);
            }
            cur.skip_space();
            forcing.emplace(std::string(cur.rest()), std::make_pair(line_no, cur.column()));
            if (end == text.size()) {
                break;
            }
            continue;
        } else {
            cur.fail_at("unknown statement '" + keyword + "'", kw_col);
        }
        if (!cur.at_end()) {
            cur.fail("unexpected trailing text");
        }
        if (end == text.size()) {
            break;
        }
    }

    const std::size_t last_line = std::max<std::size_t>(last_content, 1);
    if (!axes) {
        throw ParseError("missing 'axes' declaration", last_line, 1);
    }
    if (!target) {
        throw ParseError("missing 'field' declaration", last_line, 1);
    }
    if (!have_anchor) {
        throw ParseError("missing 'anchor' term", last_line, 1);
    }
    if (std::find(exogenous.begin(), exogenous.end(), *target) != exogenous.end()) {
        throw ParseError("target field '" + *target + "' is also declared exogenous", last_line, 1);
    }
    model.axes = *axes;
    model.target = *target;
    model.exogenous = exogenous;

    std::set<std::string> free_names;
    for (const RawTerm& rt : raw_terms) {
        Term term;
        if (rt.kind == RawTerm::Kind::Free) {
            if (!free_names.insert(rt.name).second) {
                throw ParseError("duplicate coefficient name '" + rt.name + "'", rt.line, rt.column);
            }
            term.free_name = rt.name;
        }
        term.fixed_value = rt.value;
        bool has_target = false;
        for (const RawFactor& rf : rt.factors) {
            Factor f;
            f.name = rf.name;
            if (rf.name == model.target) {
                has_target = true;
            } else if (std::find(exogenous.begin(), exogenous.end(), rf.name) != exogenous.end()) {
                f.exogenous = true;
            } else {
                throw ParseError("unknown field '" + rf.name + "'", rf.line, rf.column);
            }
            for (const auto& [axis, order] : rf.derivative) {
                if (std::find(model.axes.begin(), model.axes.end(), axis) == model.axes.end()) {
                    throw ParseError("unknown axis '" + axis + "' in derivative", rf.line, rf.column);
                }
                if (order > 0) {
                    f.derivative[axis] += order;
                }
            }
            if (f.exogenous && !f.derivative.empty()) {
                throw ParseError("exogenous field '" + rf.name + "' cannot be differentiated", rf.line, rf.column);
            }
            term.factors.push_back(std::move(f));
        }
        if (!has_target) {
            throw ParseError("term must contain the target field '" + model.target + "'", rt.line, rt.column);
        }
        // Linear factor: highest total derivative order among target factors,
        // ties go to the last one.
        int best = -1;
        for (std::size_t i = 0; i < term.factors.size(); ++i) {
            const Factor& f = term.factors[i];
            if (!f.exogenous && f.total_order() >= best) {
                best = f.total_order();
                term.linear_factor = i;
            }
        }
        switch (rt.kind) {
            case RawTerm::Kind::Anchor:
                model.anchor = std::move(term);
                break;
            case RawTerm::Kind::Free:
                model.free_terms.push_back(std::move(term));
                break;
            case RawTerm::Kind::Fixed:
                model.fixed_terms.push_back(std::move(term));
                break;
        }
    }
    if (model.free_terms.empty()) {
        throw ParseError("model needs at least one free 'term'", last_line, 1);
    }
    if (forcing) {
        model.forcing =
            Expression::parse(forcing->first, model.axes, forcing->second.first, forcing->second.second);
    }
    return model;
}

ConstraintBuilder::ConstraintBuilder(const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
                                     const ExogenousFields& exogenous)
    : model_(model), spec_(spec), grid_(grid), nonlinear_(model.is_nonlinear()) {
    std::vector<std::string> grid_axes;
    for (const auto& ax : grid_.axes()) {
        grid_axes.push_back(ax.name);
    }
    {
        std::vector<std::string> a = model_.axes;
        std::vector<std::string> b = grid_axes;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            throw MismatchError("model axes do not match the data grid axes");
        }
    }

    derivs_.emplace(DerivIndex(grid_.dims(), 0), assemble_grid_matrix(spec_, grid_, DerivIndex(grid_.dims(), 0)));
    auto add_term = [&](const Term& t) {
        for (const auto& f : t.factors) {
            if (f.exogenous) {
                continue;
            }
            const DerivIndex alpha = index_of(f);
            if (!derivs_.contains(alpha)) {
                derivs_.emplace(alpha, assemble_grid_matrix(spec_, grid_, alpha));
            }
        }
    };
    add_term(model_.anchor);
    std::for_each(model_.fixed_terms.begin(), model_.fixed_terms.end(), add_term);
    std::for_each(model_.free_terms.begin(), model_.free_terms.end(), add_term);

    const auto n = static_cast<Eigen::Index>(grid_.point_count());
    for (const auto& name : model_.exogenous) {
        const auto it = exogenous.find(name);
        if (it == exogenous.end()) {
            throw MismatchError("missing exogenous field '" + name + "'");
        }
        const FieldData& fd = it->second;
        if (!(fd.grid == grid_)) {
            throw MismatchError("exogenous field '" + name + "' is not on the fit grid");
        }
        const std::vector<double>& v = fd.has_field(name) ? fd.field(name)
                                       : fd.values.size() == 1 ? fd.values.front()
                                                               : fd.field(name);
        if (static_cast<Eigen::Index>(v.size()) != n) {
            throw MismatchError("exogenous field '" + name + "' has the wrong number of values");
        }
        exogenous_.emplace(name, Eigen::Map<const Eigen::VectorXd>(v.data(), n));
    }

    forcing_ = Eigen::VectorXd::Zero(n);
    if (!model_.forcing.is_constant_zero()) {
        // forcing variables follow model axis order
        std::vector<std::size_t> perm;
        for (const auto& a : model_.axes) {
            perm.push_back(grid_.axis_index(a));
        }
        std::vector<double> vars(perm.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto x = grid_.point(static_cast<std::size_t>(i));
            for (std::size_t k = 0; k < perm.size(); ++k) {
                vars[k] = x[perm[k]];
            }
            forcing_[i] = model_.forcing.evaluate(vars);
        }
    }
}

DerivIndex ConstraintBuilder::index_of(const Factor& f) const {
    DerivIndex alpha(grid_.dims(), 0);
    for (const auto& [axis, order] : f.derivative) {
        alpha[grid_.axis_index(axis)] = order;
    }
    return alpha;
}

SparseRowMatrix ConstraintBuilder::term_matrix(const Term& term, const Eigen::VectorXd& beta) const {
    const Factor& lin = term.factors[term.linear_factor];
    SparseRowMatrix a = derivs_.at(index_of(lin));
    if (term.factors.size() == 1) {
        return a;
    }
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(a.rows());
    for (std::size_t i = 0; i < term.factors.size(); ++i) {
        if (i == term.linear_factor) {
            continue;
        }
        const Factor& f = term.factors[i];
        if (f.exogenous) {
            scale.array() *= exogenous_.at(f.name).array();
        } else {
            scale.array() *= (derivs_.at(index_of(f)) * beta).array();
        }
    }
    for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
        for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
            it.valueRef() *= scale[r];
        }
    }
    return a;
}

ConstraintMatrices ConstraintBuilder::build(const Eigen::VectorXd& beta) const {
    const SparseRowMatrix& b = basis();
    if (beta.size() != b.cols()) {
        throw ArgumentError("beta has " + std::to_string(beta.size()) + " entries, basis has " +
                            std::to_string(b.cols()));
    }
    ConstraintMatrices out;
    out.basis = b;
    out.fixed = term_matrix(model_.anchor, beta);
    if (model_.anchor.fixed_value != 1.0) {
        out.fixed *= model_.anchor.fixed_value;
    }
    for (const Term& t : model_.fixed_terms) {
        out.fixed += t.fixed_value * term_matrix(t, beta);
    }
    out.free.reserve(model_.free_terms.size());
    for (const Term& t : model_.free_terms) {
        out.free.push_back(term_matrix(t, beta));
        if (t.fixed_value != 1.0) {
            out.free.back() *= t.fixed_value;
        }
    }
    out.forcing = forcing_;
    return out;
}

ConstraintMatrices build_constraint_matrices(const ModelSpec& model, const BasisSpec& spec, const Grid& grid,
                                             const ExogenousFields& exogenous, const Eigen::VectorXd& beta) {
    return ConstraintBuilder(model, spec, grid, exogenous).build(beta);
}

Eigen::VectorXd constraint_residual(const ConstraintMatrices& m, const Eigen::VectorXd& beta,
                                    const Eigen::VectorXd& theta) {
    if (theta.size() != static_cast<Eigen::Index>(m.free.size())) {
        throw ArgumentError("theta has " + std::to_string(theta.size()) + " entries, model has " +
                            std::to_string(m.free.size()) + " free coefficients");
    }
    Eigen::VectorXd f = m.fixed * beta - m.forcing;
    for (std::size_t j = 0; j < m.free.size(); ++j) {
        f += theta[static_cast<Eigen::Index>(j)] * (m.free[j] * beta);
    }
    return f;
}

}  // namespace snape
