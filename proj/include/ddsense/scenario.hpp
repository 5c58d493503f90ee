#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "analytic.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "spinsys.hpp"

namespace ddsense {

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t b = 0;
    for (;;) {
        const auto e = s.find(sep, b);
        out.emplace_back(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
        if (e == std::string_view::npos) break;
        b = e + 1;
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("bad number '" + s + "' for " + what);
    }
}

// "lo:hi:n" -> n uniformly spaced values.
inline std::vector<double> parse_range(const std::string& s) {
    const auto f = split(s, ':');
    if (f.size() != 3) throw ValidationError("range must look like lo:hi:n, got '" + s + "'");
    const double n = parse_double(f[2], "range count");
    if (n < 1 || n != static_cast<int>(n)) throw ValidationError("range count must be a positive integer");
    const double lo = parse_double(f[0], "range start"), hi = parse_double(f[1], "range end");
    const int k = static_cast<int>(n);
    if (k > 1 && !(hi > lo)) throw ValidationError("range end must exceed start");
    std::vector<double> g(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) g[static_cast<std::size_t>(i)] = k == 1 ? lo : lo + (hi - lo) * i / (k - 1);
    return g;
}

inline std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    for (const auto& t : split(s, ',')) v.push_back(parse_double(t, "list"));
    return v;
}

inline std::vector<Rational> parse_orders(const std::string& s) {
    std::vector<Rational> v;
    for (const auto& t : split(s, ',')) v.push_back(parse_rational(t));
    return v;
}

// ac:amp=<MHz>,freq=<MHz>[,phase=<rad>]
// bath:B=<G>,species=<name>[,gamma=<kHz/G>],apar=<kHz>,aperp=<kHz>[,species=...]
inline SignalSource parse_source(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
    std::vector<std::pair<std::string, std::string>> kv;
    if (!rest.empty())
        for (const auto& item : split(rest, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw ValidationError("source item '" + item + "' is not key=value");
            kv.emplace_back(item.substr(0, eq), item.substr(eq + 1));
        }
    if (kind == "ac") {
        ACField f;
        bool amp = false, freq = false;
        for (const auto& [k, v] : kv) {
            if (k == "amp") f.amplitude = parse_double(v, k), amp = true;
            else if (k == "freq") f.frequency = parse_double(v, k), freq = true;
            else if (k == "phase") f.phase_offset = parse_double(v, k);
            else throw ValidationError("unknown ac source key '" + k + "'");
        }
        if (!amp || !freq) throw ValidationError("ac source needs amp= and freq=");
        validate(f);
        return f;
    }
    if (kind == "bath") {
        NuclearBath b;
        bool have_B = false;
        for (const auto& [k, v] : kv) {
            if (k == "B") {
                b.field_B = parse_double(v, k);
                have_B = true;
                continue;
            }
            if (k == "species") {
                b.spins.push_back({0, 0, 0, v});
                if (constants().gamma_n.count(v)) b.spins.back().gamma = gyromagnetic(v);
                continue;
            }
            if (b.spins.empty()) throw ValidationError("bath key '" + k + "' before any species=");
            auto& sp = b.spins.back();
            if (k == "apar") sp.a_par = parse_double(v, k);
            else if (k == "aperp") sp.a_perp = parse_double(v, k);
            else if (k == "gamma") sp.gamma = parse_double(v, k);
            else throw ValidationError("unknown bath source key '" + k + "'");
        }
        if (!have_B) throw ValidationError("bath source needs B=");
        for (const auto& sp : b.spins)
            if (!(sp.gamma > 0)) throw ValidationError("species '" + sp.species + "' needs gamma=");
        validate(b);
        return b;
    }
    throw ValidationError("source must start with 'ac:' or 'bath:'");
}

} // namespace ddsense
