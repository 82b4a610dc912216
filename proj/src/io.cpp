#include "soblab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace soblab {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string sweep_csv(const std::vector<StabilityReport>& rows) {
    std::ostringstream os;
    os << "# sweep-csv-v1\n";
    os << "n,p,epsilon,eps_out,lhs,rhs,ratio,slope,pairing,identity_grad,identity_mass,"
          "grad_term,sq_term,min_integral,mass_term,c_emp,link_grad_ineq,link_mass_ineq,"
          "link_gap,link_duality,amplitude_drift,ortho_max,flagged,error\n";
    for (const auto& r : rows) {
        os << r.n << ',' << fmt17(r.p) << ',' << fmt17(r.epsilon) << ',' << fmt17(r.eps_out)
           << ',' << fmt17(r.lhs) << ',' << fmt17(r.rhs) << ',' << fmt17(r.ratio) << ','
           << fmt17(r.slope) << ',' << fmt17(r.terms.pairing) << ','
           << fmt17(r.terms.identity_grad) << ',' << fmt17(r.terms.identity_mass) << ','
           << fmt17(r.terms.grad_term) << ',' << fmt17(r.terms.sq_term) << ','
           << fmt17(r.terms.min_integral) << ',' << fmt17(r.terms.mass_term) << ','
           << fmt17(r.terms.c_emp) << ',' << fmt17(r.terms.link_grad_ineq) << ','
           << fmt17(r.terms.link_mass_ineq) << ',' << fmt17(r.terms.link_gap) << ','
           << fmt17(r.terms.link_duality) << ',' << fmt17(r.amplitude_drift) << ','
           << fmt17(r.ortho_max) << ',' << (r.flagged_exact ? 1 : 0) << ','
           << (r.error.empty() ? "" : "\"" + r.error + "\"") << '\n';
    }
    return os.str();
}

std::map<std::string, std::string> parse_config(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        return s.substr(a, b - a + 1);
    };
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
        out[key] = val;
    }
    return out;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

} // namespace soblab
