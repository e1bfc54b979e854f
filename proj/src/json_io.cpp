#include "parisi/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "parisi/errors.hpp"

namespace parisi {

MixtureSpec mixture_from_json(const json& j, bool allow_zero) {
    if (!j.is_object() || !j.contains("coeffs"))
        throw config_error("mixture: expected {\"coeffs\": {...}}");
    require_known_keys(j, {"coeffs"}, "mixture");
    std::map<int, double> coeffs;
    for (const auto& [key, val] : j.at("coeffs").items()) {
        std::size_t pos = 0;
        int p = std::stoi(key, &pos);
        if (pos != key.size()) throw config_error("mixture: bad degree key '" + key + "'");
        coeffs[p] = val.get<double>();
    }
    return MixtureSpec(coeffs, allow_zero);
}

json mixture_to_json(const MixtureSpec& spec) {
    json coeffs = json::object();
    for (const auto& [p, c] : spec.coeffs()) coeffs[std::to_string(p)] = c;
    return json{{"coeffs", coeffs}};
}

AtomicMeasure measure_from_json(const json& j) {
    if (!j.is_object() || !j.contains("atoms") || !j.contains("weights"))
        throw config_error("measure: expected {\"atoms\": [...], \"weights\": [...]}");
    require_known_keys(j, {"atoms", "weights"}, "measure");
    return AtomicMeasure(j.at("atoms").get<std::vector<double>>(),
                         j.at("weights").get<std::vector<double>>());
}

json measure_to_json(const AtomicMeasure& m) {
    return json{{"atoms", m.atoms()}, {"weights", m.weights()}};
}

json criterion_to_json(const CriterionReport& rep) {
    return json{{"q_grid", rep.q_grid},
                {"derivative_values", rep.derivative_values},
                {"min_value", rep.min_value},
                {"verdict", rep.pass ? "pass" : "fail"},
                {"worst_q", rep.worst_q}};
}

json at_line_to_json(const ATLineReport& rep) {
    return json{{"q_root", rep.q_root},
                {"lhs_ineq", rep.lhs_ineq},
                {"rs_consistent", rep.rs_consistent},
                {"all_roots", rep.all_roots}};
}

json estimate_to_json(const ParisiEstimate& est) {
    return json{{"k_used", est.k_used},
                {"value", est.value},
                {"atoms", est.measure.atoms()},
                {"weights", est.measure.weights()},
                {"eta", est.eta},
                {"history", est.history},
                {"conclusive", est.conclusive},
                {"criterion", criterion_to_json(est.criterion)}};
}

json certificate_to_json(const BoundCurve& curve) {
    return json{{"mode", to_string(curve.mode)},
                {"verdict", curve.verdict},
                {"margin", curve.margin},
                {"q_star", curve.q_star},
                {"eta", curve.eta},
                {"two_P", curve.two_P},
                {"hypotheses",
                 json{{"convexity", curve.hypotheses.convexity},
                      {"ratio", curve.hypotheses.ratio},
                      {"dominance", curve.hypotheses.dominance}}}};
}

void write_phi_csv(std::ostream& os, const PhiSolution& phi, const std::string& preamble) {
    if (!preamble.empty()) os << preamble;
    os << "s,x,phi,dphi,ddphi\n";
    char buf[160];
    for (std::size_t j = 0; j < phi.nodes.size(); ++j) {
        const PhiSlice& sl = phi.slices[j];
        for (int i = 0; i < phi.grid.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", sl.s,
                          phi.grid.x(i), sl.phi[i], sl.dphi[i], sl.ddphi[i]);
            os << buf;
        }
    }
}

void write_curve_csv(std::ostream& os, const MomentCurve& curve, const std::string& preamble) {
    if (!preamble.empty()) os << preamble;
    os << (curve.monte_carlo ? "r,eu2,euxx2,stderr\n" : "r,eu2,euxx2\n");
    char buf[160];
    for (std::size_t i = 0; i < curve.r.size(); ++i) {
        if (curve.monte_carlo)
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", curve.r[i], curve.eu2[i],
                          curve.euxx2[i], curve.std_err[i]);
        else
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", curve.r[i], curve.eu2[i],
                          curve.euxx2[i]);
        os << buf;
    }
}

void write_bound_csv(std::ostream& os, const BoundCurve& curve, const std::string& preamble) {
    if (!preamble.empty()) os << preamble;
    os << "q,lambda_star,Lambda,two_P,margin,psd_ok\n";
    char buf[200];
    for (const auto& pt : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", pt.q,
                      pt.lambda_star, pt.Lambda, curve.two_P, curve.two_P - pt.Lambda,
                      pt.psd_ok ? 1 : 0);
        os << buf;
    }
}

void write_histogram_csv(std::ostream& os, const OverlapHistogram& hist,
                         const std::string& preamble) {
    if (!preamble.empty()) os << preamble;
    os << "q,probability,std_err\n";
    char buf[120];
    for (std::size_t i = 0; i < hist.q.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", hist.q[i], hist.prob[i],
                      hist.std_err[i]);
        os << buf;
    }
}

std::string config_hash(const json& j) {
    std::string dump = j.dump();  // nlohmann objects iterate in sorted key order
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw config_error("cannot open output file " + tmp);
        os << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw config_error("cannot rename " + tmp + " to " + path);
}

void require_known_keys(const json& j, const std::vector<std::string>& allowed,
                        const std::string& context) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const auto& k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw config_error(context + ": unknown key '" + item.key() + "'");
    }
}

}  // namespace parisi
