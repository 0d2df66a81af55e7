#include "fbsmp/problem.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "fbsmp/lq.hpp"

namespace fbsmp {

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw std::invalid_argument("problem config: unknown key '" + path + key + "'");
    }
}

double num(const json& obj, const std::string& key, double fallback) {
    return obj.contains(key) ? obj.at(key).get<double>() : fallback;
}

ControlDomain domain_from_json(const json& d) {
    reject_unknown(d, {"type", "values", "lo", "hi", "grid"}, "control.domain.");
    const std::string type = d.at("type").get<std::string>();
    if (type == "finite") return ControlDomain::finite(d.at("values").get<std::vector<double>>());
    if (type == "interval")
        return ControlDomain::interval(d.at("lo").get<double>(), d.at("hi").get<double>(),
                                       d.contains("grid") ? d.at("grid").get<int>() : 101);
    throw std::invalid_argument("problem config: control.domain.type must be finite|interval");
}

std::shared_ptr<const CoefficientModel> coefficients_from_json(const json& c) {
    if (c.is_string()) {
        const Problem preset = make_problem_preset(c.get<std::string>());
        return preset.coefficients;
    }
    const std::string family = c.at("family").get<std::string>();
    if (family == "linear") {
        reject_unknown(c,
                       {"family", "a1", "b1", "c1", "a2", "b2", "c2", "a3", "b3", "c3", "du_b",
                        "du_s", "du_g", "l1", "l2", "l3", "kappa"},
                       "coefficients.");
        LinearParams p;
        p.a1 = num(c, "a1", 0); p.b1 = num(c, "b1", 0); p.c1 = num(c, "c1", 0);
        p.a2 = num(c, "a2", 0); p.b2 = num(c, "b2", 0); p.c2 = num(c, "c2", 0);
        p.a3 = num(c, "a3", 0); p.b3 = num(c, "b3", 0); p.c3 = num(c, "c3", 0);
        p.du_b = num(c, "du_b", 0); p.du_s = num(c, "du_s", 0); p.du_g = num(c, "du_g", 0);
        auto pair = [&](const std::string& key, double& c0, double& ct) {
            if (!c.contains(key)) return;
            const auto arr = c.at(key).get<std::vector<double>>();
            if (arr.size() != 2)
                throw std::invalid_argument("problem config: " + key + " must be [const, slope]");
            c0 = arr[0];
            ct = arr[1];
        };
        pair("l1", p.l1_0, p.l1_t);
        pair("l2", p.l2_0, p.l2_t);
        pair("l3", p.l3_0, p.l3_t);
        p.kappa = num(c, "kappa", 0);
        return std::make_shared<LinearModel>("linear-inline", p);
    }
    if (family == "example") {
        reject_unknown(c, {"family", "a", "b", "c", "d"}, "coefficients.");
        ExampleParams p;
        p.a = num(c, "a", p.a);
        p.b = num(c, "b", p.b);
        p.c = num(c, "c", p.c);
        p.d = num(c, "d", p.d);
        return std::make_shared<ExampleModel>(p);
    }
    if (family == "smooth") {
        reject_unknown(c,
                       {"family", "bx", "by", "bz", "bu", "sx", "sy", "sz", "su", "s0", "gx",
                        "gy", "gz", "gu", "gu2", "px", "p2", "linear_z"},
                       "coefficients.");
        SmoothParams p;
        p.bx = num(c, "bx", 0); p.by = num(c, "by", 0); p.bz = num(c, "bz", 0);
        p.bu = num(c, "bu", 0);
        p.sx = num(c, "sx", 0); p.sy = num(c, "sy", 0); p.sz = num(c, "sz", 0);
        p.su = num(c, "su", 0); p.s0 = num(c, "s0", 0);
        p.gx = num(c, "gx", 0); p.gy = num(c, "gy", 0); p.gz = num(c, "gz", 0);
        p.gu = num(c, "gu", 0); p.gu2 = num(c, "gu2", 0);
        p.px = num(c, "px", 0); p.p2 = num(c, "p2", 0);
        p.linear_z = c.contains("linear_z") && c.at("linear_z").get<bool>();
        return std::make_shared<SmoothModel>("smooth-inline", p);
    }
    if (family == "lq") {
        reject_unknown(c, {"family", "coeffs", "F", "G", "J", "x0"}, "coefficients.");
        const auto coeffs = c.at("coeffs").get<std::vector<double>>();
        return std::make_shared<LqModel>(LQCoefficients::constants(
            coeffs, num(c, "F", 0), num(c, "G", 0), num(c, "J", 0), num(c, "x0", 1)));
    }
    throw std::invalid_argument("problem config: unknown coefficients.family '" + family + "'");
}

}  // namespace

Problem problem_from_json(const json& doc) {
    reject_unknown(doc, {"preset", "T", "N", "x0", "coefficients", "control", "spike", "seed"},
                   "");
    Problem pr;
    if (doc.contains("preset")) {
        pr = make_problem_preset(doc.at("preset").get<std::string>());
    } else {
        pr.preset = "inline";
        if (!doc.contains("coefficients"))
            throw std::invalid_argument(
                "problem config: either 'preset' or 'coefficients' is required");
    }
    if (doc.contains("T")) pr.T = doc.at("T").get<double>();
    if (doc.contains("N")) pr.N = doc.at("N").get<int>();
    if (doc.contains("x0")) pr.x0 = doc.at("x0").get<double>();
    if (doc.contains("seed")) pr.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("coefficients")) pr.coefficients = coefficients_from_json(doc.at("coefficients"));
    if (doc.contains("control")) {
        const json& ctrl = doc.at("control");
        reject_unknown(ctrl, {"domain", "u_bar"}, "control.");
        if (ctrl.contains("domain")) pr.domain = domain_from_json(ctrl.at("domain"));
        if (ctrl.contains("u_bar")) pr.u_bar = ctrl.at("u_bar").get<double>();
    }
    if (doc.contains("spike")) {
        const json& spk = doc.at("spike");
        reject_unknown(spk, {"t0", "eps", "u"}, "spike.");
        pr.spike.t0 = num(spk, "t0", pr.spike.t0);
        pr.spike.eps = num(spk, "eps", pr.spike.eps);
        pr.spike.replacement = num(spk, "u", pr.spike.replacement);
    }
    if (!(pr.T > 0)) throw std::invalid_argument("problem config: T must be positive");
    if (pr.N < 1) throw std::invalid_argument("problem config: N must be >= 1");
    if (!pr.domain.contains(pr.u_bar))
        throw std::invalid_argument("problem config: u_bar outside the control domain");
    return pr;
}

Problem load_problem_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open problem file: " + path);
    json doc = json::parse(in);
    return problem_from_json(doc);
}

json problem_to_json(const Problem& pr) {
    json out;
    out["preset"] = pr.preset;
    out["T"] = pr.T;
    out["N"] = pr.N;
    out["x0"] = pr.x0;
    out["coefficients"] = pr.coefficients ? pr.coefficients->name() : "none";
    json domain;
    if (pr.domain.kind == ControlDomain::Kind::FiniteSet) {
        domain["type"] = "finite";
        domain["values"] = pr.domain.values;
    } else {
        domain["type"] = "interval";
        domain["lo"] = pr.domain.lo;
        domain["hi"] = pr.domain.hi;
        domain["grid"] = pr.domain.grid;
    }
    out["control"] = {{"domain", domain}, {"u_bar", pr.u_bar}};
    out["spike"] = {{"t0", pr.spike.t0}, {"eps", pr.spike.eps}, {"u", pr.spike.replacement}};
    out["seed"] = pr.seed;
    return out;
}

}  // namespace fbsmp
