#include "pno/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pno {
namespace {

std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double_v(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key `" + key + "`: not a number: " + v);
    }
}

long long parse_int_v(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key `" + key + "`: not an integer: " + v);
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cur = trim(cur);
    if (!cur.empty() || !parts.empty()) parts.push_back(cur);
    for (const std::string& p : parts)
        if (p.empty()) throw std::invalid_argument("config: empty list entry in: " + v);
    return parts;
}

double inv_or_zero(double q) { return std::isinf(q) ? 0.0 : 1.0 / q; }

}  // namespace

std::string to_string(InitialDataKind kind) {
    switch (kind) {
        case InitialDataKind::eigenmode: return "eigenmode";
        case InitialDataKind::random_trig: return "random_trig";
        case InitialDataKind::bump: return "bump";
    }
    throw std::logic_error("unknown initial data kind");
}

InitialDataKind initial_kind_from_string(const std::string& s) {
    if (s == "eigenmode") return InitialDataKind::eigenmode;
    if (s == "random_trig") return InitialDataKind::random_trig;
    if (s == "bump") return InitialDataKind::bump;
    throw std::invalid_argument("unknown initial data kind: " + s);
}

ProblemSetup ExperimentConfig::setup() const {
    ProblemSetup s;
    s.op = op;
    s.f = f;
    s.norm = norm;
    s.T = T;
    s.M = M;
    s.M_prime = M_prime;
    s.R = R;
    s.domain_measure = domain_measure;
    return s;
}

void ExperimentConfig::validate() const {
    op.validate();
    f.validate();
    validate_exponent(norm.r, "r");
    validate_exponent(norm.s, "s");
    if (norm.r < f.p)
        throw std::invalid_argument("config: r=" + format_sig17(norm.r) +
                                    " rejected: need r,s in [p,inf] with p=" + format_sig17(f.p));
    if (norm.s < f.p)
        throw std::invalid_argument("config: s=" + format_sig17(norm.s) +
                                    " rejected: need r,s in [p,inf] with p=" + format_sig17(f.p));
    if (f.p > 1.0) {
        const double lhs = op.nu * inv_or_zero(norm.s) + inv_or_zero(norm.r);
        const double rhs = 1.0 / (f.p - 1.0);
        if (!(lhs < rhs))
            throw std::invalid_argument(
                "config: exponent condition nu/s + 1/r < 1/(p-1) fails: " + format_sig17(lhs) +
                " >= " + format_sig17(rhs));
    }
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("config: T must be positive and finite");
    if (certified && T > 1.0)
        throw std::invalid_argument("config: certified mode needs T <= 1");
    for (double v : {M, M_prime, R, domain_measure, dt_factor})
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::invalid_argument(
                "config: M, M_prime, R, domain_measure, dt_factor must be positive");
    if (!(delta_target > 0.0) || !(delta_target < 1.0))
        throw std::invalid_argument("config: delta_target must lie in (0,1)");
    if (nt < 2) throw std::invalid_argument("config: nt must be >= 2");
    if (nx < 1) throw std::invalid_argument("config: nx must be >= 1");
    if (grid4 < 2 || (grid4 & (grid4 - 1)) != 0)
        throw std::invalid_argument("config: grid4 must be a power of two >= 2");
    if (eps_list.empty()) throw std::invalid_argument("config: eps_list must not be empty");
    for (double e : eps_list)
        if (!(e > 0.0) || !(e < 1.0))
            throw std::invalid_argument("config: eps_list entries must lie in (0,1)");
    if (u0_count < 1) throw std::invalid_argument("config: u0_count must be >= 1");
    if (u0_kinds.empty()) throw std::invalid_argument("config: u0_kinds must not be empty");
    if (kappa < 1) throw std::invalid_argument("config: kappa must be >= 1");
    if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
    if (certified) {
        const ContractionConstants cc = derive_constants(setup());
        if (!cc.usable())
            throw std::invalid_argument("config: certified mode infeasible: " + cc.failure);
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: line " + std::to_string(line_no) + ": empty key");
        if (!seen.insert(key).second)
            throw std::invalid_argument("config: duplicate key `" + key + "`");

        if (key == "nu") c.op.nu = parse_double_v(key, val);
        else if (key == "c_l") c.op.c_L = parse_double_v(key, val);
        else if (key == "k_eval") c.op.k_eval = int(parse_int_v(key, val));
        else if (key == "r") c.norm.r = parse_double_v(key, val);
        else if (key == "s") c.norm.s = parse_double_v(key, val);
        else if (key == "f_kind") {
            if (val == "signed_power") c.f.kind = NonlinearitySpec::Kind::signed_power;
            else if (val == "abs_power") c.f.kind = NonlinearitySpec::Kind::abs_power;
            else if (val == "polynomial") c.f.kind = NonlinearitySpec::Kind::polynomial;
            else throw std::invalid_argument("config: key `f_kind`: unknown kind: " + val);
        } else if (key == "f_p") c.f.p = parse_double_v(key, val);
        else if (key == "f_scale") c.f.scale = parse_double_v(key, val);
        else if (key == "f_poly") {
            c.f.poly.clear();
            for (const std::string& p : split_list(val))
                c.f.poly.push_back(parse_double_v(key, p));
        } else if (key == "c_f") c.f.c_F = parse_double_v(key, val);
        else if (key == "T") c.T = parse_double_v(key, val);
        else if (key == "M") c.M = parse_double_v(key, val);
        else if (key == "M_prime") c.M_prime = parse_double_v(key, val);
        else if (key == "R") c.R = parse_double_v(key, val);
        else if (key == "domain_measure") c.domain_measure = parse_double_v(key, val);
        else if (key == "delta_target") c.delta_target = parse_double_v(key, val);
        else if (key == "nt") c.nt = int(parse_int_v(key, val));
        else if (key == "nx") c.nx = int(parse_int_v(key, val));
        else if (key == "grid4") c.grid4 = int(parse_int_v(key, val));
        else if (key == "basis") c.basis = basis_kind_from_string(val);
        else if (key == "eps_list") {
            c.eps_list.clear();
            for (const std::string& p : split_list(val))
                c.eps_list.push_back(parse_double_v(key, p));
        } else if (key == "u0_count") c.u0_count = int(parse_int_v(key, val));
        else if (key == "u0_seed") c.u0_seed = std::uint64_t(parse_int_v(key, val));
        else if (key == "u0_kinds") {
            c.u0_kinds.clear();
            for (const std::string& p : split_list(val))
                c.u0_kinds.push_back(initial_kind_from_string(p));
        } else if (key == "mode") {
            if (val == "certified") c.certified = true;
            else if (val == "practical") c.certified = false;
            else throw std::invalid_argument("config: key `mode`: expected certified|practical");
        } else if (key == "kappa") c.kappa = int(parse_int_v(key, val));
        else if (key == "iterations") c.iterations = int(parse_int_v(key, val));
        else if (key == "dt_factor") c.dt_factor = parse_double_v(key, val);
        else if (key == "n_list") {
            c.n_list.clear();
            for (const std::string& p : split_list(val)) {
                const long long n = parse_int_v(key, p);
                if (n < 1) throw std::invalid_argument("config: n_list entries must be >= 1");
                c.n_list.push_back(std::size_t(n));
            }
        } else {
            throw std::invalid_argument("config: unknown key `" + key + "`");
        }
    }

    for (const char* req : {"r", "s", "f_kind", "f_p", "T", "nt", "nx"})
        if (seen.find(req) == seen.end())
            throw std::invalid_argument(std::string("config: missing required key `") + req + "`");

    c.validate();
    return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "# linear operator\n";
    os << "nu=" << format_sig17(c.op.nu) << '\n';
    os << "c_l=" << format_sig17(c.op.c_L) << '\n';
    os << "k_eval=" << c.op.k_eval << '\n';
    os << "# mixed norm\n";
    os << "r=" << format_sig17(c.norm.r) << '\n';
    os << "s=" << format_sig17(c.norm.s) << '\n';
    os << "# nonlinearity\n";
    os << "f_kind="
       << (c.f.kind == NonlinearitySpec::Kind::signed_power
               ? "signed_power"
               : c.f.kind == NonlinearitySpec::Kind::abs_power ? "abs_power" : "polynomial")
       << '\n';
    os << "f_p=" << format_sig17(c.f.p) << '\n';
    os << "f_scale=" << format_sig17(c.f.scale) << '\n';
    os << "f_poly=";
    for (std::size_t i = 0; i < c.f.poly.size(); ++i)
        os << (i ? "," : "") << format_sig17(c.f.poly[i]);
    os << '\n';
    os << "c_f=" << format_sig17(c.f.c_F) << '\n';
    os << "# contraction system\n";
    os << "T=" << format_sig17(c.T) << '\n';
    os << "M=" << format_sig17(c.M) << '\n';
    os << "M_prime=" << format_sig17(c.M_prime) << '\n';
    os << "R=" << format_sig17(c.R) << '\n';
    os << "domain_measure=" << format_sig17(c.domain_measure) << '\n';
    os << "delta_target=" << format_sig17(c.delta_target) << '\n';
    os << "# discretization\n";
    os << "nt=" << c.nt << '\n';
    os << "nx=" << c.nx << '\n';
    os << "grid4=" << c.grid4 << '\n';
    os << "# experiment\n";
    os << "basis=" << to_string(c.basis) << '\n';
    os << "eps_list=";
    for (std::size_t i = 0; i < c.eps_list.size(); ++i)
        os << (i ? "," : "") << format_sig17(c.eps_list[i]);
    os << '\n';
    os << "u0_count=" << c.u0_count << '\n';
    os << "u0_seed=" << c.u0_seed << '\n';
    os << "u0_kinds=";
    for (std::size_t i = 0; i < c.u0_kinds.size(); ++i)
        os << (i ? "," : "") << to_string(c.u0_kinds[i]);
    os << '\n';
    os << "mode=" << (c.certified ? "certified" : "practical") << '\n';
    os << "kappa=" << c.kappa << '\n';
    os << "iterations=" << c.iterations << '\n';
    os << "dt_factor=" << format_sig17(c.dt_factor) << '\n';
    os << "n_list=";
    for (std::size_t i = 0; i < c.n_list.size(); ++i) os << (i ? "," : "") << c.n_list[i];
    os << '\n';
    return os.str();
}

}  // namespace pno
