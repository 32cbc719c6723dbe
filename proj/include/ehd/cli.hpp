#pragma once
//
// cli.hpp
//
// Command runner behind the ehd command-line tool. A RunConfig is filled from
// key=value pairs (config file first, then flags), validated, and executed;
// every artifact starts with a provenance line carrying the tool version and
// a hash of the canonical configuration.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blowup.hpp"
#include "corner_solver.hpp"
#include "energy.hpp"
#include "field.hpp"
#include "frequency.hpp"
#include "minimizer.hpp"
#include "profiles.hpp"
#include "weiss.hpp"

namespace ehd::cli {

inline constexpr const char* tool_version = "1.0.0";

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"verify-profiles", "weiss",    "frequency",    "minimize",
                                            "blowup",          "classify", "corner-solve", "pipeline"};
    return c;
}

struct RunConfig {
    std::string command;
    std::string input;            // field file or catalog name
    std::string boundary;         // boundary data for minimize/pipeline: catalog name or field file
    Vec2 center{};
    double kappa = 1.5;
    std::string radii;            // empty, "log:RMAX:COUNT" or "r1,r2,..."
    double h = 1.0 / 128;
    double half = 1.125;          // half-width of sampled catalog fields
    double x2_0 = 0.0;
    std::string variant = "bilateral";
    std::string out = ".";
    std::uint64_t seed = 1;
    int max_sweeps = 4000;
    double search_radius = 0.25;  // classify/pipeline: how far from center a candidate may lie
    std::string expect;           // expected label for classify/pipeline
};

/// Exit status of a run.
enum class Status { ok = 0, assertion_failed = 1, usage = 2 };

namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_number(const std::string& key, const std::string& v) {
    // accepts plain numbers and fractions such as 1/128
    auto one = [&](const std::string& s) {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size() || !std::isfinite(x))
            throw error(errc::invalid_argument, "bad number for " + key + ": '" + v + "'");
        return x;
    };
    const auto slash = v.find('/');
    if (slash == std::string::npos) return one(v);
    const double d = one(v.substr(slash + 1));
    if (d == 0.0) throw error(errc::invalid_argument, "zero denominator for " + key);
    return one(v.substr(0, slash)) / d;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool is_catalog_name(const std::string& s) {
    try {
        catalog_profile(s);
        return true;
    } catch (const error&) {
        return false;
    }
}

} // namespace detail

/// Sets one configuration key; unknown keys and malformed values are usage errors.
inline void set(RunConfig& c, const std::string& key, const std::string& raw) {
    const std::string v = detail::trim(raw);
    if (key == "command") c.command = v;
    else if (key == "input") c.input = v;
    else if (key == "boundary") c.boundary = v;
    else if (key == "center") {
        const auto comma = v.find(',');
        if (comma == std::string::npos) throw error(errc::invalid_argument, "center must be 'x1,x2'");
        c.center = {detail::parse_number(key, detail::trim(v.substr(0, comma))),
                    detail::parse_number(key, detail::trim(v.substr(comma + 1)))};
    } else if (key == "kappa") c.kappa = detail::parse_number(key, v);
    else if (key == "radii") c.radii = v;
    else if (key == "h") c.h = detail::parse_number(key, v);
    else if (key == "half") c.half = detail::parse_number(key, v);
    else if (key == "x2_0") c.x2_0 = detail::parse_number(key, v);
    else if (key == "variant") c.variant = v;
    else if (key == "out") c.out = v;
    else if (key == "seed") {
        const double s = detail::parse_number(key, v);
        if (s < 0 || s != std::floor(s)) throw error(errc::invalid_argument, "seed must be a nonnegative integer");
        c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "max_sweeps") {
        const double s = detail::parse_number(key, v);
        if (s < 1 || s != std::floor(s)) throw error(errc::invalid_argument, "max_sweeps must be a positive integer");
        c.max_sweeps = static_cast<int>(s);
    } else if (key == "search_radius") c.search_radius = detail::parse_number(key, v);
    else if (key == "expect") c.expect = v;
    else throw error(errc::invalid_argument, "unknown configuration key '" + key + "'");
}

/// key=value lines; blank lines and '#' comments are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config(std::istream& is) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw error(errc::parse_error, "config line " + std::to_string(lineno) + ": expected key=value");
        out.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return out;
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw error(errc::invalid_argument, "cannot open config file '" + path + "'");
    for (const auto& [k, v] : parse_config(is)) set(c, k, v);
}

/// Canonical text of everything that influences the results (the output
/// directory does not, so reruns into another directory hash the same).
inline std::string canonical(const RunConfig& c) {
    std::ostringstream os;
    os << "boundary=" << c.boundary << '\n'
       << "center=" << detail::num(c.center.x) << ',' << detail::num(c.center.y) << '\n'
       << "command=" << c.command << '\n'
       << "expect=" << c.expect << '\n'
       << "h=" << detail::num(c.h) << '\n'
       << "half=" << detail::num(c.half) << '\n'
       << "input=" << c.input << '\n'
       << "kappa=" << detail::num(c.kappa) << '\n'
       << "max_sweeps=" << c.max_sweeps << '\n'
       << "radii=" << c.radii << '\n'
       << "search_radius=" << detail::num(c.search_radius) << '\n'
       << "seed=" << c.seed << '\n'
       << "variant=" << c.variant << '\n'
       << "x2_0=" << detail::num(c.x2_0) << '\n';
    return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t x = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        x ^= ch;
        x *= 0x100000001b3ULL;
    }
    return x;
}

inline std::string config_hash(const RunConfig& c) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical(c))));
    return buf;
}

/// Radii from their text form; default is 13 log-spaced radii filling the hull around the center.
inline std::vector<double> parse_radii(const std::string& text, double room) {
    if (text.empty()) return log_radii(room * (1 - 1e-9));
    std::vector<double> r;
    if (text.rfind("log:", 0) == 0) {
        const auto colon = text.find(':', 4);
        if (colon == std::string::npos) throw error(errc::invalid_argument, "radii must be 'log:RMAX:COUNT'");
        const double rmax = detail::parse_number("radii", text.substr(4, colon - 4));
        const double count = detail::parse_number("radii", text.substr(colon + 1));
        if (count < 2 || count > 64 || count != std::floor(count))
            throw error(errc::invalid_argument, "radii count must be an integer in [2, 64]");
        r = log_radii(rmax, static_cast<int>(count));
    } else {
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) r.push_back(detail::parse_number("radii", detail::trim(item)));
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
        if (!(r[k] > 0)) throw error(errc::invalid_argument, "radii must be positive");
        if (k > 0 && !(r[k] < r[k - 1])) throw error(errc::invalid_argument, "radii must be strictly descending");
    }
    if (r.empty()) throw error(errc::invalid_argument, "empty radii list");
    return r;
}

/// Checks ranges and paths; throws invalid-argument.
inline void validate(const RunConfig& c) {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), c.command) == cmds.end())
        throw error(errc::invalid_argument, "unknown command '" + c.command + "'");
    if (!(c.h > 0 && c.h <= 0.125)) throw error(errc::invalid_argument, "h must lie in (0, 1/8]");
    if (!(c.half > 0 && c.half / c.h <= 4096)) throw error(errc::invalid_argument, "half must be positive and at most 4096 h");
    if (!(c.search_radius > 0)) throw error(errc::invalid_argument, "search_radius must be positive");
    auto need_source = [&](const std::string& what, const std::string& v) {
        if (v.empty()) throw error(errc::invalid_argument, c.command + " needs --" + what);
        if (!detail::is_catalog_name(v) && !std::filesystem::exists(v))
            throw error(errc::invalid_argument, what + " '" + v + "' is neither a catalog name nor a file");
    };
    if (c.command == "weiss" || c.command == "frequency" || c.command == "blowup" || c.command == "classify")
        need_source("input", c.input);
    if (c.command == "minimize" || c.command == "pipeline") need_source("boundary", c.boundary);
    if (c.command == "weiss" && !(c.kappa >= 1.0 && c.kappa <= 1.5))
        throw error(errc::invalid_argument, "kappa must lie in [1, 3/2]");
    if (c.command == "corner-solve" && c.variant != "all" && !parse_corner_variant(c.variant))
        throw error(errc::invalid_argument, "unknown variant '" + c.variant + "'");
    if (!c.expect.empty()) {
        bool known = false;
        for (Label l : {Label::StokesCorner, Label::AsymmetricLeft, Label::AsymmetricRight, Label::Cusp,
                        Label::HorizontalPoint, Label::NonStagnation, Label::Unclassified})
            known = known || c.expect == to_string(l);
        if (!known) throw error(errc::invalid_argument, "unknown label '" + c.expect + "'");
    }
    if (!c.radii.empty()) parse_radii(c.radii, 1.0);
}

// ---------------------------------------------------------------------------
// execution

class Artifacts {
public:
    Artifacts(const RunConfig& c, std::ostream& log) : dir_(c.out), log_(log) {
        std::filesystem::create_directories(dir_);
        header_ = std::string("# ehd version=") + tool_version + " config_hash=" + config_hash(c) + "\n";
        summary_ = "command=" + c.command + " version=" + tool_version + " config_hash=" + config_hash(c);
    }

    /// Writes header + body to dir/name.
    void file(const std::string& name, const std::string& body) const {
        std::ofstream os(std::filesystem::path(dir_) / name, std::ios::binary);
        if (!os) throw error(errc::invalid_argument, "cannot write artifact '" + name + "'");
        os << header_ << body;
    }

    template <class W>
    void file_with(const std::string& name, W&& writer) const {
        std::ostringstream os;
        writer(os);
        file(name, os.str());
    }

    void put(const std::string& key, const std::string& value) { summary_ += " " + key + "=" + value; }
    void put(const std::string& key, double value) { put(key, detail::num(value)); }
    void put(const std::string& key, long long value) { put(key, std::to_string(value)); }

    /// Single-line summary record: printed and written to summary.txt.
    void finish(Status st) {
        put("status", static_cast<long long>(st));
        file("summary.txt", summary_ + "\n");
        log_ << summary_ << '\n';
    }

private:
    std::string dir_;
    std::ostream& log_;
    std::string header_;
    std::string summary_;
};

namespace detail {

inline ScalarField load_field(const std::string& source, const RunConfig& c) {
    if (is_catalog_name(source)) return ScalarField::square(c.half, c.h, catalog_profile(source), c.x2_0);
    std::ifstream is(source);
    if (!is) throw error(errc::invalid_argument, "cannot open field file '" + source + "'");
    return read_field(is);
}

inline double room(const ScalarField& u, Vec2 x0) {
    return std::min({x0.x - u.lo().x, u.hi().x - x0.x, x0.y - u.lo().y, u.hi().y - x0.y});
}

inline std::string expected_label(const RunConfig& c) {
    if (!c.expect.empty()) return c.expect;
    if (c.boundary == "A1" || c.boundary == "A2" || c.boundary == "A3") return to_string(Label::StokesCorner);
    if (c.boundary == "A4L") return to_string(Label::AsymmetricLeft);
    if (c.boundary == "A4R") return to_string(Label::AsymmetricRight);
    return "";
}

inline Status verify_profiles(const RunConfig& c, Artifacts& a) {
    std::vector<PiecewiseProfile> all = corner_catalog();
    for (int n : {2, 3, 4}) all.push_back(w_profile(n));
    all.push_back(linear_profile());
    std::ostringstream csv;
    csv << "name,fb_residual,laplacian_residual,density,density_kind,density_quadrature\n";
    bool ok = true;
    for (const auto& p : all) {
        const bool corner = p.tag != CatalogTag::W && p.tag != CatalogTag::LINEAR;
        double fb = 0.0;
        if (corner)
            for (const auto& r : fb_residual(p)) fb = std::max(fb, std::abs(r.residual));
        double lap = 0.0;
        for (const auto& s : p.pieces)
            for (double rho : {0.5, 1.0}) {
                const double t = 0.5 * (s.theta_lo + s.theta_hi);
                lap = std::max(lap, std::abs(laplacian_residual(p, Polar{rho, t})));
            }
        const DensityValue d = density(p);
        const PhasedField pf(ScalarField::square(c.half, c.h, p));
        const double quad =
            phase_ball_integral(pf, Phase::negative, [](Vec2 x) { return weight_below(x, 0.0); }, {0.0, 0.0}, 1.0);
        csv << p.name << ',' << num(corner ? fb : std::nan("")) << ',' << num(lap) << ',' << num(d.value) << ','
            << to_string(d.kind) << ',' << num(quad) << '\n';
        if (corner && fb > 1e-12) ok = false;
        if (lap > 1e-12) ok = false;
        if (corner) {
            const double want = (p.tag == CatalogTag::A4L || p.tag == CatalogTag::A4R) ? constants::asymmetric_density
                                                                                       : constants::stokes_density;
            if (std::abs(d.value - want) > 1e-15) ok = false;
        }
    }
    a.file("profiles.csv", csv.str());
    a.file_with("catalog.txt", [&](std::ostream& os) { write_catalog(os, all); });
    a.put("profiles", static_cast<long long>(all.size()));
    return ok ? Status::ok : Status::assertion_failed;
}

inline Status weiss(const RunConfig& c, Artifacts& a) {
    const ScalarField u = load_field(c.input, c);
    const std::vector<double> radii = parse_radii(c.radii, room(u, c.center));
    const WeissReport rep = weiss_report(PhasedField(u), c.center, c.kappa, radii);
    a.file_with("weiss.csv", [&](std::ostream& os) { write_weiss_csv(os, rep); });
    a.put("kappa", c.kappa);
    a.put("density_estimate", rep.density_estimate);
    a.put("density_converged", static_cast<long long>(rep.density_converged));
    a.put("monotone_violations", static_cast<long long>(rep.monotone_violations));
    a.put("max_violation", rep.max_violation);
    return rep.monotone_violations == 0 ? Status::ok : Status::assertion_failed;
}

inline Status frequency(const RunConfig& c, Artifacts& a) {
    const ScalarField u = load_field(c.input, c);
    const std::vector<double> radii =
        c.radii.empty() ? log_radii(room(u, c.center) * (1 - 1e-9), 5) : parse_radii(c.radii, 1.0);
    const FrequencyReport rep = freq_H(PhasedField(u), c.center, radii);
    a.file_with("frequency.csv", [&](std::ostream& os) { write_frequency_csv(os, rep); });
    a.put("degenerate", static_cast<long long>(rep.degenerate));
    if (!rep.degenerate) {
        a.put("H_limit", rep.H_limit);
        a.put("extrapolated", static_cast<long long>(rep.extrapolated));
        a.put("N0_estimate", rep.N0_estimate);
    }
    a.put("monotone_violations", static_cast<long long>(rep.monotone_violations));
    return !rep.degenerate && rep.monotone_violations == 0 ? Status::ok : Status::assertion_failed;
}

inline MinimizeResult run_minimize(const RunConfig& c) {
    MinimizeParams mp;
    mp.seed = c.seed;
    mp.max_sweeps = c.max_sweeps;
    if (is_catalog_name(c.boundary)) {
        const PiecewiseProfile p = catalog_profile(c.boundary);
        const int cells = static_cast<int>(std::lround(2.0 / c.h));
        return minimize(Grid::square(1.0, cells), [&](Vec2 x) { return eval(p, x); }, c.x2_0, mp);
    }
    return minimize(load_field(c.boundary, c), mp);
}

inline void write_minimize(const MinimizeResult& r, Artifacts& a) {
    a.file_with("field.txt", [&](std::ostream& os) { write_field(os, r.field); });
    a.file_with("energy.csv", [&](std::ostream& os) { write_energy_csv(os, r); });
    a.file_with("free_boundary.csv", [&](std::ostream& os) { write_polylines_csv(os, r.fb); });
    a.put("converged", static_cast<long long>(r.converged));
    a.put("final_energy", r.energy_history.back());
    a.put("sharp_energy", lattice_energy(r.field, r.field.datum()));
    long long sweeps = 0;
    for (int s : r.stage_sweeps) sweeps += s;
    a.put("stages", static_cast<long long>(r.stage_sweeps.size()));
    a.put("sweeps", sweeps);
}

inline Status minimize_cmd(const RunConfig& c, Artifacts& a) {
    const MinimizeResult r = run_minimize(c);
    write_minimize(r, a);
    return r.converged ? Status::ok : Status::assertion_failed;
}

inline Status blowup(const RunConfig& c, Artifacts& a) {
    const ScalarField u = load_field(c.input, c);
    const StagnationReport rep = find_stagnation(u);
    std::ostringstream csv;
    csv << "kind,x1,x2,grad_minus,height_gap\n";
    auto rows = [&](const char* kind, const std::vector<StagnationCandidate>& v) {
        for (const auto& s : v)
            csv << kind << ',' << num(s.location.x) << ',' << num(s.location.y) << ',' << num(s.grad_minus) << ','
                << num(s.height_gap) << '\n';
    };
    rows("candidate", rep.candidates);
    rows("anomalous", rep.anomalous);
    a.file("stagnation.csv", csv.str());
    a.put("candidates", static_cast<long long>(rep.candidates.size()));
    a.put("anomalous", static_cast<long long>(rep.anomalous.size()));
    a.put("tol_g", rep.tol_g);
    a.put("tol_h", rep.tol_h);
    return rep.anomalous.empty() ? Status::ok : Status::assertion_failed;
}

inline Status report_classification(const ClassificationResult& r, const std::string& expect, Artifacts& a) {
    a.file_with("evidence.csv", [&](std::ostream& os) { write_evidence_csv(os, r); });
    a.file("classification.txt", to_summary(r) + "\n");
    a.put("label", std::string(to_string(r.label)));
    a.put("density", r.density);
    if (r.slopes) {
        a.put("l_minus", r.slopes->l_minus);
        a.put("l_plus", r.slopes->l_plus);
    }
    a.put("chi_minus_fraction", r.chi_minus_fraction);
    if (!expect.empty()) {
        a.put("expected", expect);
        return expect == to_string(r.label) ? Status::ok : Status::assertion_failed;
    }
    return r.label == Label::Unclassified ? Status::assertion_failed : Status::ok;
}

inline Status classify_cmd(const RunConfig& c, Artifacts& a) {
    const ScalarField u = load_field(c.input, c);
    return report_classification(classify_near(u, c.center, c.search_radius), c.expect, a);
}

inline Status corner_solve(const RunConfig& c, Artifacts& a) {
    std::vector<CornerVariant> vs;
    if (c.variant == "all")
        vs = {CornerVariant::unilateral_config_1, CornerVariant::unilateral_config_2, CornerVariant::bilateral};
    else
        vs = {*parse_corner_variant(c.variant)};
    std::ostringstream csv;
    bool ok = true;
    long long count = 0;
    std::string thetas;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        const CornerSolution sol = solve(CornerSystem{vs[k]});
        std::ostringstream part;
        write_roots_csv(part, sol);
        std::string body = part.str();
        if (k > 0) body = body.substr(body.find('\n') + 1); // one header row
        csv << body;
        for (const auto& r : sol.roots) {
            ++count;
            thetas += (thetas.empty() ? "" : ";") + num(r.theta1);
            if (r.residual_norm >= 1e-12) ok = false;
            for (const auto& fr : fb_residual(profile_from_root(r)))
                if (std::abs(fr.residual) > 1e-12) ok = false;
        }
    }
    a.file("roots.csv", csv.str());
    a.put("roots", count);
    a.put("theta1", thetas);
    return ok ? Status::ok : Status::assertion_failed;
}

inline Status pipeline(const RunConfig& c, Artifacts& a) {
    const MinimizeResult r = run_minimize(c);
    write_minimize(r, a);
    const ClassificationResult cl = classify_near(r.field, c.center, c.search_radius);
    const Status st = report_classification(cl, expected_label(c), a);
    return r.converged && st == Status::ok ? Status::ok : Status::assertion_failed;
}

} // namespace detail

/// Validates and executes the command. Usage errors give exit status 2,
/// failed assertions and diagnostic failures 1.
inline int run(const RunConfig& c, std::ostream& log) {
    try {
        validate(c);
    } catch (const error& e) {
        log << "usage error: " << e.what() << '\n';
        return static_cast<int>(Status::usage);
    }
    Artifacts a(c, log);
    Status st = Status::ok;
    try {
        if (c.command == "verify-profiles") st = detail::verify_profiles(c, a);
        else if (c.command == "weiss") st = detail::weiss(c, a);
        else if (c.command == "frequency") st = detail::frequency(c, a);
        else if (c.command == "minimize") st = detail::minimize_cmd(c, a);
        else if (c.command == "blowup") st = detail::blowup(c, a);
        else if (c.command == "classify") st = detail::classify_cmd(c, a);
        else if (c.command == "corner-solve") st = detail::corner_solve(c, a);
        else st = detail::pipeline(c, a);
    } catch (const minimize_error& e) {
        std::ostringstream os;
        os << "index,energy\n";
        for (std::size_t k = 0; k < e.history().size(); ++k) os << k << ',' << detail::num(e.history()[k]) << '\n';
        a.file("energy.csv", os.str());
        a.put("error", std::string(to_string(e.code())));
        st = Status::assertion_failed;
    } catch (const error& e) {
        if (e.code() == errc::invalid_argument || e.code() == errc::parse_error) {
            log << "usage error: " << e.what() << '\n';
            return static_cast<int>(Status::usage);
        }
        a.put("error", std::string(to_string(e.code())));
        st = Status::assertion_failed;
    }
    a.finish(st);
    return static_cast<int>(st);
}

} // namespace ehd::cli
