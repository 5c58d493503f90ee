#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "sequence.hpp"

namespace ddsense::dsl {

struct PhaseSpec {
    bool symbolic = false;  // `phi`
    double value = 0;
    bool operator==(const PhaseSpec&) const = default;
};

struct PulseSpec {
    double angle = pi;
    PhaseSpec phase;
    bool operator==(const PulseSpec&) const = default;
};

struct BlockStmt {
    std::vector<PulseSpec> pulses;
    int repeat = 1;
    bool operator==(const BlockStmt&) const = default;
};

struct ProgramTemplate {
    std::optional<PulseSpec> init;
    std::vector<BlockStmt> blocks;
    std::optional<PulseSpec> final;
    bool operator==(const ProgramTemplate&) const = default;
};

struct Bindings {
    double tau = 0;
    double rabi = 0;
    std::optional<double> phi;
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : s_(src) {}

    ProgramTemplate run() {
        ProgramTemplate t;
        enum { Start, Blocks, Done } state = Start;
        for (;;) {
            skip_separators();
            if (eof()) break;
            const int line = line_, col = col_;
            const auto kw = word();
            if (kw == "init") {
                if (state != Start) fail(line, col, "'init' must be the first statement");
                t.init = boundary();
                state = Blocks;
            } else if (kw == "block") {
                if (state == Done) fail(line, col, "'block' after 'final'");
                t.blocks.push_back(block());
                state = Blocks;
            } else if (kw == "final") {
                if (state == Done) fail(line, col, "duplicate 'final'");
                if (t.blocks.empty()) fail(line, col, "'final' before any block");
                t.final = boundary();
                state = Done;
            } else {
                fail(line, col, kw.empty() ? "expected a statement" : "unknown statement '" + std::string(kw) + "'");
            }
            end_of_statement();
        }
        if (t.blocks.empty()) fail(line_, col_, "program needs at least one block");
        return t;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1, col_ = 1;

    [[noreturn]] static void fail(int line, int col, const std::string& msg) { throw ParseError(line, col, msg); }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col_, msg); }

    bool eof() const { return i_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[i_]; }
    void advance() {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }
    void skip_comment() {
        while (!eof() && peek() != '\n') advance();
    }
    // Whitespace inside a statement; newlines end statements.
    void skip_blank() {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') advance();
            else if (c == '#') skip_comment();
            else break;
        }
    }
    void skip_separators() {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == ';') advance();
            else if (c == '#') skip_comment();
            else break;
        }
    }
    void end_of_statement() {
        skip_blank();
        if (!eof() && peek() != ';' && peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    }
    void expect(char c) {
        skip_blank();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }
    bool accept(std::string_view lit) {
        skip_blank();
        if (s_.substr(i_, lit.size()) != lit) return false;
        // keep identifiers whole
        const std::size_t j = i_ + lit.size();
        if (std::isalpha(static_cast<unsigned char>(lit.back())) && j < s_.size() &&
            (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_'))
            return false;
        for (std::size_t k = 0; k < lit.size(); ++k) advance();
        return true;
    }
    std::string_view word() {
        skip_blank();
        const std::size_t b = i_;
        while (!eof() && (std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) advance();
        return s_.substr(b, i_ - b);
    }
    std::optional<double> number() {
        skip_blank();
        double v = 0;
        const char* b = s_.data() + i_;
        auto r = std::from_chars(b, s_.data() + s_.size(), v);
        if (r.ec != std::errc() || r.ptr == b) return std::nullopt;
        const auto n = static_cast<std::size_t>(r.ptr - b);
        for (std::size_t k = 0; k < n; ++k) advance();
        return v;
    }

    double angle() {
        skip_blank();
        if (accept("3pi/2")) return 3 * pi / 2;
        if (accept("pi/2")) return pi / 2;
        if (accept("pi")) return pi;
        const int line = line_, col = col_;
        auto v = number();
        if (!v) fail(line, col, "expected angle (pi, pi/2, 3pi/2 or <float> rad)");
        if (!accept("rad")) fail("angle literal needs unit 'rad'");
        return *v;
    }

    PhaseSpec phase() {
        skip_blank();
        if (accept("phi")) return {true, 0};
        if (accept("-x")) return {false, phases::mx};
        if (accept("-y")) return {false, phases::my};
        if (accept("x")) return {false, phases::x};
        if (accept("y")) return {false, phases::y};
        const int line = line_, col = col_;
        auto v = number();
        if (!v) fail(line, col, "expected phase (x, -x, y, -y, phi or <float> rad|deg)");
        if (accept("rad")) return {false, *v};
        if (accept("deg")) return {false, *v * pi / 180.0};
        fail("phase literal needs unit 'rad' or 'deg'");
    }

    PulseSpec boundary() {
        PulseSpec p;
        p.angle = angle();
        expect('@');
        p.phase = phase();
        return p;
    }

    BlockStmt block() {
        BlockStmt b;
        expect('[');
        do {
            const int line = line_, col = col_;
            PulseSpec p = boundary();
            if (p.angle != pi) fail(line, col, "block pulses must have area pi");
            b.pulses.push_back(p);
            skip_blank();
        } while (peek() == ',' && (advance(), true));
        expect(']');
        if (!accept("x")) fail("expected 'x <count>' after block");
        skip_blank();
        const int line = line_, col = col_;
        int n = 0;
        const char* beg = s_.data() + i_;
        auto r = std::from_chars(beg, s_.data() + s_.size(), n);
        if (r.ec != std::errc() || r.ptr == beg) fail(line, col, "expected integer repeat count");
        for (auto k = r.ptr - beg; k > 0; --k) advance();
        if (n < 1) fail(line, col, "repeat count must be >= 1");
        b.repeat = n;
        return b;
    }
};

} // namespace detail

inline ProgramTemplate parse_template(std::string_view text) { return detail::Parser(text).run(); }

inline bool uses_phi(const ProgramTemplate& t) {
    auto sym = [](const std::optional<PulseSpec>& p) { return p && p->phase.symbolic; };
    if (sym(t.init) || sym(t.final)) return true;
    for (const auto& b : t.blocks)
        for (const auto& p : b.pulses)
            if (p.phase.symbolic) return true;
    return false;
}

inline PulseProgram instantiate(const ProgramTemplate& t, const Bindings& bind) {
    if (uses_phi(t) && !bind.phi) throw ValidationError("program uses 'phi' but no value is bound");
    auto resolve = [&](const PhaseSpec& ph) { return ph.symbolic ? *bind.phi : ph.value; };
    std::vector<double> ph;
    for (const auto& b : t.blocks)
        for (int r = 0; r < b.repeat; ++r)
            for (const auto& p : b.pulses) ph.push_back(resolve(p.phase));
    PulseProgram p = build_train(ph, bind.tau, bind.rabi, std::nullopt, "dsl");
    if (t.init) {
        p.init_pulse = make_boundary(t.init->angle, resolve(t.init->phase), bind.rabi);
        p.init_phase = p.init_pulse->phase;
    }
    if (t.final) {
        p.final_pulse = make_boundary(t.final->angle, resolve(t.final->phase), bind.rabi);
        if (!t.init) p.init_phase = p.final_pulse->phase;
    }
    if (!t.init && !t.final && bind.phi) p.init_phase = *bind.phi;
    return p;
}

inline PulseProgram parse_program(std::string_view text, const Bindings& bind) {
    return instantiate(parse_template(text), bind);
}

} // namespace ddsense::dsl
