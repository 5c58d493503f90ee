// ddsense: pulsed-sensing spectra, phase sweeps, harmonic labelling, field
// identification and robustness surfaces. CSV goes to stdout or --out.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <ddsense.hpp>

using namespace ddsense;
using json = nlohmann::json;

namespace {

struct Common {
    std::string scenario;
    std::string seq = "xy8";
    int blocks = 1;
    std::string dsl_file;
    std::string dsl_text;
    double rabi = 25;
    double phi = 0;
    std::string source;
    std::string boundary = "finite";
    std::string integrator = "adaptive";
    double max_step = 0;
    double rel_tol = 1e-10;
    double t2 = 0;
    double t2_exp = 1;
    std::string phase_policy = "fixed";
    int phase_grid = 16;
    int threads = 0;
    std::string out;
};

void add_common(CLI::App* s, Common& c) {
    s->add_option("--scenario", c.scenario, "JSON scenario; flags override its values");
    s->add_option("--seq", c.seq, "xy8 | yy8 | cpmg")->check(CLI::IsMember({"xy8", "yy8", "cpmg"}));
    s->add_option("--blocks", c.blocks, "8-pulse blocks (pulses for cpmg)");
    s->add_option("--dsl", c.dsl_file, "pulse program file (overrides --seq)");
    s->add_option("--dsl-text", c.dsl_text, "inline pulse program");
    s->add_option("--rabi-mhz", c.rabi, "Rabi frequency, MHz");
    s->add_option("--phi", c.phi, "initial phase, rad");
    s->add_option("--source", c.source, "ac:amp=,freq=[,phase=] or bath:B=,species=,apar=,aperp=[,gamma=]");
    s->add_option("--boundary", c.boundary, "finite | ideal init/final pulses")->check(CLI::IsMember({"finite", "ideal"}));
    s->add_option("--integrator", c.integrator, "adaptive | oracle")->check(CLI::IsMember({"adaptive", "oracle"}));
    s->add_option("--max-step", c.max_step, "largest step, us (oracle default t_pi/2000)");
    s->add_option("--rel-tol", c.rel_tol, "adaptive tolerance");
    s->add_option("--t2", c.t2, "T2 envelope time, us (0 = off)");
    s->add_option("--t2-exp", c.t2_exp, "T2 envelope exponent");
    s->add_option("--phase-policy", c.phase_policy, "fixed | max (worst case over signal phase)")
        ->check(CLI::IsMember({"fixed", "max"}));
    s->add_option("--phase-grid", c.phase_grid, "signal phases tried by --phase-policy max");
    s->add_option("--threads", c.threads, "worker threads (default DDSENSE_THREADS or all cores)");
    s->add_option("--out", c.out, "output CSV path");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Scenario values fill in options not given on the command line.
void apply_scenario(CLI::App* sub, const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ValidationError("scenario '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "command" || key == "description") continue;
        CLI::Option* o = sub->get_option_no_throw("--" + key);
        if (!o) throw ValidationError("scenario key '" + key + "' is not an option of '" + sub->get_name() + "'");
        if (o->count() > 0) continue;
        std::string s;
        if (v.is_string()) {
            s = v.get<std::string>();
        } else if (v.is_array()) {
            for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
        } else {
            s = v.dump();
        }
        o->add_result(s);
        try {
            o->run_callback();
        } catch (const CLI::Error& e) {
            throw ValidationError("scenario key '" + key + "': " + e.what());
        }
    }
}

Family parse_family(const std::string& s) {
    if (s == "xy8") return Family::XY8;
    if (s == "yy8") return Family::YY8;
    return Family::CPMG;
}

SequenceRecipe recipe(const Common& c) {
    SequenceRecipe r{parse_family(c.seq), c.blocks, c.rabi, c.phi, std::nullopt};
    if (!c.dsl_file.empty()) r.dsl = dsl::parse_template(read_file(c.dsl_file));
    else if (!c.dsl_text.empty()) r.dsl = dsl::parse_template(c.dsl_text);
    return r;
}

SimulationConfig config(const Common& c) {
    SimulationConfig cfg;
    cfg.integrator = c.integrator == "oracle" ? Integrator::FixedStepOracle : Integrator::Adaptive;
    cfg.max_step = c.max_step > 0 ? c.max_step : (cfg.integrator == Integrator::FixedStepOracle ? pi_duration(c.rabi) / 2000 : 0.01);
    cfg.rel_tol = c.rel_tol;
    cfg.boundary_pulses = c.boundary == "ideal" ? BoundaryMode::Ideal : BoundaryMode::Finite;
    if (c.t2 > 0) cfg.t2_envelope = T2Envelope{c.t2, c.t2_exp};
    validate(cfg);
    return cfg;
}

ScanOptions options(const Common& c) {
    return {c.phase_policy == "max" ? PhasePolicy::MaxOverGrid : PhasePolicy::Fixed, c.phase_grid, c.threads};
}

SignalSource source(const Common& c) {
    if (c.source.empty()) throw ValidationError("--source is required");
    return parse_source(c.source);
}

double beta0(const SignalSource& src, double rabi) {
    if (const auto* f = std::get_if<ACField>(&src)) return f->amplitude / rabi;
    double a = 0;
    for (const auto& s : std::get<NuclearBath>(src).spins) a = std::max(a, std::abs(khz_to_mhz(s.a_perp)));
    return a / (2 * rabi);
}

template <class Fn>
void emit(const Common& c, Fn&& write) {
    if (c.out.empty()) {
        write(std::cout);
        return;
    }
    std::ofstream f(c.out);
    if (!f) throw ValidationError("cannot write '" + c.out + "'");
    write(f);
}

std::vector<Species> parse_species(const std::string& s) {
    std::vector<Species> v;
    for (const auto& name : split(s, ',')) v.push_back(species(name));
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulsed quantum-sensing simulator: dynamical-decoupling spectra and spurious-harmonic analysis"};
    app.require_subcommand(1);

    Common cs, cp, ch, ci, cr;

    auto* spec = app.add_subcommand("spectrum", "P0 versus pulse interval tau");
    add_common(spec, cs);
    std::string tau_range;
    spec->add_option("--tau-range", tau_range, "lo:hi:n, us");

    auto* phase = app.add_subcommand("phase-sweep", "P0 versus initial phase at fixed tau");
    add_common(phase, cp);
    double ps_tau = 0;
    std::string ps_order;
    int ps_count = 12;
    phase->add_option("--tau", ps_tau, "pulse interval, us");
    phase->add_option("--order", ps_order, "harmonic order k; tau = 1/(2 k f) of the ac source");
    phase->add_option("--phi-count", ps_count, "grid j pi / n, j = 0..n-1");

    auto* harm = app.add_subcommand("harmonics", "detect dips and label them by species and harmonic order");
    add_common(harm, ch);
    std::string h_tau_range, h_species = "1H,13C", h_orders = "1,2,4", h_peaks;
    double h_field = 0, h_tol = 0.02, h_min_depth = 0;
    harm->add_option("--tau-range", h_tau_range, "lo:hi:n, us");
    harm->add_option("--field", h_field, "B for labelling, G (default: bath B)");
    harm->add_option("--species", h_species, "candidate species");
    harm->add_option("--orders", h_orders, "candidate orders, e.g. 1,2,4,4/5");
    harm->add_option("--tol", h_tol, "relative frequency tolerance");
    harm->add_option("--min-depth", h_min_depth, "dip threshold (default max(10 b0^3, 0.002))");
    harm->add_option("--peak-khz", h_peaks, "label these apparent frequencies instead of scanning");

    auto* ident = app.add_subcommand("identify", "resonance versus field and gyromagnetic slope fit");
    add_common(ident, ci);
    std::string i_fields = "450,480,510,540,570", i_window = "0.9:1.1:400", i_species = "1H,13C", i_orders = "1,2,4";
    double i_min_depth = 0, i_tol = 0.02;
    ident->add_option("--fields", i_fields, "B values, G");
    ident->add_option("--window", i_window, "tau window lo:hi:n relative to 1/(2 gamma B)");
    ident->add_option("--species", i_species, "candidate species for labelling");
    ident->add_option("--orders", i_orders, "candidate orders for labelling");
    ident->add_option("--tol", i_tol, "relative frequency tolerance");
    ident->add_option("--min-depth", i_min_depth, "dip threshold");

    auto* rob = app.add_subcommand("robustness", "fundamental contrast versus amplitude error and detuning");
    add_common(rob, cr);
    double r_tau = 0;
    std::string r_eps = "-0.05:0.05:11", r_delta = "0:0:1";
    rob->add_option("--tau", r_tau, "fundamental pulse interval, us");
    rob->add_option("--eps-range", r_eps, "lo:hi:n relative amplitude error");
    rob->add_option("--delta-range", r_delta, "lo:hi:n detuning, MHz");

    try {
        app.parse(argc, argv);
        for (auto [sub, c] : {std::pair{spec, &cs}, {phase, &cp}, {harm, &ch}, {ident, &ci}, {rob, &cr}})
            if (sub->parsed() && !c->scenario.empty()) apply_scenario(sub, c->scenario);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (spec->parsed()) {
            if (tau_range.empty()) throw ValidationError("--tau-range is required");
            const auto s = scan_tau(recipe(cs), source(cs), parse_range(tau_range), config(cs), options(cs));
            emit(cs, [&](std::ostream& os) { csv::write_spectrum(os, s); });
        } else if (phase->parsed()) {
            const auto src = source(cp);
            double tau = ps_tau;
            if (!ps_order.empty()) {
                const auto* f = std::get_if<ACField>(&src);
                if (!f) throw ValidationError("--order needs an ac source");
                tau = harmonic_positions(f->frequency, {parse_rational(ps_order)}).front().tau;
            }
            if (!(tau > 0)) throw ValidationError("--tau or --order is required");
            if (ps_count < 1) throw ValidationError("--phi-count must be >= 1");
            std::vector<double> grid;
            for (int j = 0; j < ps_count; ++j) grid.push_back(pi * j / ps_count);
            const auto s = scan_phase(recipe(cp), src, grid, tau, config(cp), options(cp));
            emit(cp, [&](std::ostream& os) { csv::write_spectrum(os, s); });
        } else if (harm->parsed()) {
            std::vector<Peak> peaks;
            double B = h_field;
            if (!h_peaks.empty()) {
                for (double f : parse_list(h_peaks)) peaks.push_back({resonance_interval(khz_to_mhz(f)), 0, 0, khz_to_mhz(f), 1});
            } else {
                const auto src = source(ch);
                if (h_tau_range.empty()) throw ValidationError("--tau-range or --peak-khz is required");
                if (B == 0)
                    if (const auto* b = std::get_if<NuclearBath>(&src)) B = b->field_B;
                const auto s = scan_tau(recipe(ch), src, parse_range(h_tau_range), config(ch), options(ch));
                peaks = detect_peaks(s, h_min_depth > 0 ? h_min_depth : default_min_depth(beta0(src, ch.rabi)));
            }
            const auto rep = classify_peaks(peaks, parse_species(h_species), B, parse_orders(h_orders), h_tol);
            emit(ch, [&](std::ostream& os) { csv::write_report(os, rep); });
        } else if (ident->parsed()) {
            const auto src = source(ci);
            const auto* bath = std::get_if<NuclearBath>(&src);
            if (!bath) throw ValidationError("identify needs a bath source");
            const auto w = parse_range(i_window);
            if (w.size() < 3) throw ValidationError("--window needs at least 3 points");
            const auto spectra = scan_field(recipe(ci), *bath, parse_list(i_fields), {w.front(), w.back(), static_cast<int>(w.size())},
                                            config(ci), options(ci));
            const auto res = identify(spectra, i_min_depth > 0 ? i_min_depth : default_min_depth(beta0(src, ci.rabi)));
            const auto cand = parse_species(i_species);
            const auto orders = parse_orders(i_orders);
            emit(ci, [&](std::ostream& os) {
                os << "B,tau_center,apparent_freq_kHz,depth\n";
                for (std::size_t k = 0; k < res.points.size(); ++k)
                    os << csv::num(res.points[k].first) << ',' << csv::num(res.peaks[k].x_center) << ','
                       << csv::num(res.points[k].second) << ',' << csv::num(res.peaks[k].depth) << '\n';
                os << "# slope_kHz_per_G=" << csv::num(res.fit.slope) << " stderr=" << csv::num(res.fit.stderr_slope)
                   << " intercept_kHz=" << csv::num(res.fit.intercept) << '\n';
                for (std::size_t k = 0; k < res.points.size(); ++k) {
                    const auto rep = classify_peaks({res.peaks[k]}, cand, res.points[k].first, orders, i_tol);
                    for (const auto& e : rep.entries) {
                        os << "# B=" << csv::num(res.points[k].first) << ' ' << e.label();
                        for (std::size_t a = 1; a < e.candidates.size(); ++a) os << " | " << e.candidates[a].label();
                        os << '\n';
                    }
                }
            });
        } else if (rob->parsed()) {
            if (!(r_tau > 0)) throw ValidationError("--tau is required");
            RobustnessScenario sc{source(cr), r_tau, cr.blocks, cr.rabi, cr.phi, config(cr), options(cr)};
            const auto rows = robustness_surface(sc, parse_range(r_eps), parse_range(r_delta));
            emit(cr, [&](std::ostream& os) { csv::write_surface(os, rows); });
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericIntegrityError& e) {
        std::cerr << "numeric integrity error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
