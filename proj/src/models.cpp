#include "hysmc/models.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hysmc {

// ---------------------------------------------------------------------------
// Cardiac cell model: the four-variable minimal ventricular model with its
// Heaviside gates replaced by the mode structure. Mode regions:
//   q0 resting      u < theta_o
//   q1 stimulated   theta_o < u < theta_w
//   q2 excited      theta_w < u < theta_v
//   q3 AP           theta_v < u
// Parameters are the published cell-type columns; time_scale converts the
// published millisecond rates to model time units of 10 ms so that one
// 0.1-time-unit step equals 1 ms of cell dynamics (see MODEL_NOTES.md).
// ---------------------------------------------------------------------------

namespace {

struct CardiacParam {
    const char* name;
    double epi, endo, mid;
};

constexpr CardiacParam kCardiacTable[] = {
    {"theta_o", 0.006, 0.006, 0.006},
    {"theta_w", 0.13, 0.13, 0.13},
    {"theta_v", 0.3, 0.3, 0.3},
    {"u_wm", 0.03, 0.016, 0.016},
    {"u_so", 0.65, 0.65, 0.6},
    {"u_s", 0.9087, 0.9087, 0.9087},
    {"u_u", 1.55, 1.56, 1.61},
    {"w_infstar", 0.94, 0.78, 0.5},
    {"k_wm", 65, 200, 200},
    {"k_so", 2.0458, 2, 2.1},
    {"k_s", 2.994, 2.994, 2.994},
    {"tau_vp", 1.4506, 1.4506, 1.4506},
    {"tau_wp", 200, 280, 280},
    {"tau_v1m", 60, 75, 80},
    {"tau_v2m", 1150, 10, 1.4506},
    {"tau_w1m", 60, 6, 70},
    {"tau_w2m", 15, 140, 8},
    {"tau_o1", 400, 470, 410},
    {"tau_o2", 6, 6, 7},
    {"tau_so1", 30.0181, 40, 91},
    {"tau_so2", 0.9957, 1.2, 0.8},
    {"tau_s1", 2.7342, 2.7342, 2.7342},
    {"tau_s2", 16, 2, 4},
    {"tau_fi", 0.11, 0.1, 0.078},
    {"tau_si", 1.8875, 2.9013, 3.3849},
    {"tau_winf", 0.07, 0.0273, 0.01},
};

std::string format_num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

HybridAutomaton cardiac_model(CellType cell, CardiacCondition condition, StimulusProfile stim) {
    std::string doc;
    doc += "variables u v w s\n";
    doc += "delta 0.1\n";
    doc += "horizon 6000\n";

    for (const CardiacParam& p : kCardiacTable) {
        double value = cell == CellType::Epi ? p.epi : cell == CellType::Endo ? p.endo : p.mid;
        if (condition == CardiacCondition::Diseased) {
            if (std::string_view(p.name) == "tau_o1") value = 0.004;
            if (std::string_view(p.name) == "tau_o2") value = 0.1;
        }
        doc += "parameter " + std::string(p.name) + " " + format_num(value) + "\n";
    }
    doc += "parameter time_scale 10\n";

    doc += stim == StimulusProfile::Transient ? "input eps 0 1 1 0\n" : "input eps 0 1 500 0\n";

    doc += "init u 0 0.001\n";
    doc += "init v 0.999 1\n";
    doc += "init w 0.999 1\n";
    doc += "init s 0 0.001\n";
    doc += "initial q0\n";

    const std::string tau_w =
        "(tau_w1m + (tau_w2m - tau_w1m) * (1 + tanh(k_wm * (u - u_wm))) / 2)";
    const std::string tau_so =
        "(tau_so1 + (tau_so2 - tau_so1) * (1 + tanh(k_so * (u - u_so))) / 2)";
    const std::string s_inf = "(1 + tanh(k_s * (u - u_s))) / 2";

    doc += "mode q0\n";
    doc += "  label Resting mode\n";
    doc += "  ode u = time_scale * (eps - u / tau_o1)\n";
    doc += "  ode v = time_scale * ((1 - v) / tau_v1m)\n";
    doc += "  ode w = time_scale * ((1 - u / tau_winf - w) / " + tau_w + ")\n";
    doc += "  ode s = time_scale * ((" + s_inf + " - s) / tau_s1)\n";

    doc += "mode q1\n";
    doc += "  label Stimulated mode\n";
    doc += "  ode u = time_scale * (eps - u / tau_o2)\n";
    doc += "  ode v = time_scale * (-v / tau_v2m)\n";
    doc += "  ode w = time_scale * ((w_infstar - w) / " + tau_w + ")\n";
    doc += "  ode s = time_scale * ((" + s_inf + " - s) / tau_s1)\n";

    doc += "mode q2\n";
    doc += "  label Excited mode\n";
    doc += "  ode u = time_scale * (eps - 1 / " + tau_so + " + w * s / tau_si)\n";
    doc += "  ode v = time_scale * (-v / tau_v2m)\n";
    doc += "  ode w = time_scale * (-w / tau_wp)\n";
    doc += "  ode s = time_scale * ((" + s_inf + " - s) / tau_s2)\n";

    doc += "mode q3\n";
    doc += "  label AP mode\n";
    doc += "  ode u = time_scale * (eps + v * (u - theta_v) * (u_u - u) / tau_fi - 1 / " + tau_so +
           " + w * s / tau_si)\n";
    doc += "  ode v = time_scale * (-v / tau_vp)\n";
    doc += "  ode w = time_scale * (-w / tau_wp)\n";
    doc += "  ode s = time_scale * ((" + s_inf + " - s) / tau_s2)\n";

    doc += "transition q0 q1 : 0.006 < u\n";
    doc += "transition q1 q2 : 0.13 < u\n";
    doc += "transition q1 q0 : u < 0.006\n";
    doc += "transition q2 q3 : 0.3 < u\n";
    doc += "transition q2 q1 : u < 0.13\n";
    doc += "transition q3 q2 : u < 0.3\n";

    return parse_model(doc);
}

// ---------------------------------------------------------------------------
// Circadian clock model.
// ---------------------------------------------------------------------------

CircadianRates CircadianRates::defaults() {
    CircadianRates r;
    // Externally sourced rate table; mirrored in models/circadian_rates.cfg.
    r.k[1] = 0.25;  r.k[2] = 0.2;   r.k[3] = 0.25;  r.k[4] = 0.2;
    r.k[5] = 0.1;   r.k[6] = 0.25;  r.k[7] = 0.12;  r.k[8] = 0.0;
    r.k[9] = 0.15;  r.k[10] = 0.3;  r.k[11] = 0.15; r.k[12] = 0.15;
    r.k[13] = 0.6;  r.k[14] = 0.05; r.k[15] = 0.3;  r.k[16] = 0.2;
    r.k[17] = 0.6;  r.k[18] = 0.05; r.k[19] = 0.3;  r.k[20] = 0.5;
    r.k[21] = 0.02; r.k[22] = 0.25; r.k[23] = 0.0;  r.k[24] = 0.3;
    r.k[25] = 0.2;  r.k[26] = 0.6;  r.k[27] = 0.15; r.k[28] = 0.3;
    return r;
}

CircadianRates CircadianRates::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open rate file '" + path + "'");
    CircadianRates r;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        double value;
        if (!(ls >> key)) continue;
        if (key.empty() || key[0] == '#') continue;
        if (!(ls >> value)) throw Error("malformed rate line '" + line + "'");
        if (key.size() < 2 || key[0] != 'k') throw Error("unknown rate key '" + key + "'");
        int idx = std::atoi(key.c_str() + 1);
        if (idx < 1 || idx > 28) throw Error("rate index out of range in '" + key + "'");
        r.k[idx] = value;
    }
    return r;
}

namespace {

struct ModeCombo {
    int pc1, pc2, pc3, re, cb;
};

/* Mode indicator table; index 0 holds mode 1. */
constexpr ModeCombo kCombos[16] = {
    {1, 1, 0, 1, 0}, {1, 1, 0, 1, 1}, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 1},
    {0, 1, 0, 1, 0}, {0, 1, 0, 1, 1}, {0, 1, 0, 0, 0}, {0, 1, 0, 0, 1},
    {0, 0, 0, 1, 0}, {0, 0, 0, 1, 1}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 1},
    {0, 0, 1, 1, 0}, {0, 0, 1, 1, 1}, {0, 0, 1, 0, 0}, {0, 0, 1, 0, 1},
};

int hamming(const ModeCombo& a, const ModeCombo& b) {
    return (a.pc1 != b.pc1) + (a.pc2 != b.pc2) + (a.pc3 != b.pc3) + (a.re != b.re) +
           (a.cb != b.cb);
}

/* Guard for flipping one indicator to the target value: the indicator's
 * region when it turns on, the interior of the complement when it turns
 * off. */
std::string flip_guard(const ModeCombo& from, const ModeCombo& to) {
    if (from.re != to.re) return to.re ? "REV-ERB < 1.1" : "1.1 < REV-ERB";
    if (from.cb != to.cb) return to.cb ? "1 < CLOCK-BMAL" : "CLOCK-BMAL < 1";
    if (from.pc1 != to.pc1) return to.pc1 ? "PER-CRY < 1.4" : "1.4 < PER-CRY";
    if (from.pc2 != to.pc2)
        return to.pc2 ? "1.4 < PER-CRY && PER-CRY < 1.5" : "PER-CRY < 1.4 || 1.5 < PER-CRY";
    if (from.pc3 != to.pc3) return to.pc3 ? "2.2 < PER-CRY" : "PER-CRY < 2.2";
    throw Error("flip_guard called on equal combos");
}

}  // namespace

HybridAutomaton circadian_model(CircadianVariant variant) {
    return circadian_model(variant, CircadianRates::defaults());
}

HybridAutomaton circadian_model(CircadianVariant variant, const CircadianRates& rates) {
    CircadianRates r = rates;
    if (variant == CircadianVariant::CryMutant) {
        r.k[17] = 0.0;
        r.k[18] = 0.0;
    } else if (variant == CircadianVariant::RevErbMutant) {
        r.k[20] = 0.0;
        r.k[21] = 0.0;
    }

    std::string doc;
    doc += "variables Per PER Cry CRY PER-CRY Rev-Erb REV-ERB CLOCK Bmal BMAL CLOCK-BMAL\n";
    doc += "delta 0.1\n";
    doc += "horizon 5000\n";
    for (int i = 1; i <= 28; i++)
        doc += "parameter k" + std::to_string(i) + " " + format_num(r.k[i]) + "\n";

    // Clock mRNA drive: square wave, period 60 time units, high half first.
    {
        const double period = 60.0, hi = 2.0, lo = 1.2;
        const double horizon_time = 500.0;
        doc += "input Clock";
        double t = 0.0;
        bool high = true;
        while (t < horizon_time) {
            doc += " " + format_num(t) + " " + format_num(high ? hi : lo);
            t += period / 2.0;
            high = !high;
        }
        doc += "\n";
    }

    for (const char* v : {"Per", "PER", "Cry", "CRY", "PER-CRY", "Rev-Erb", "REV-ERB", "CLOCK",
                          "Bmal", "BMAL", "CLOCK-BMAL"})
        doc += "init " + std::string(v) + " 0.5 0.6\n";
    doc += "initial m1\n";

    for (int m = 0; m < 16; m++) {
        const ModeCombo& c = kCombos[m];
        doc += "mode m" + std::to_string(m + 1) + "\n";
        doc += std::string("  ode Per = -k1 * Per + ") +
               (c.pc2 && c.cb ? "k13 + k14" : "k14") + "\n";
        doc += "  ode PER = -k2 * PER + k15 * Per - k16 * PER * CRY\n";
        doc += std::string("  ode Cry = -k3 * Cry + ") +
               (c.pc2 && c.cb ? "k17 + k18" : "k18") + "\n";
        doc += "  ode CRY = -k4 * CRY + k19 * Cry - k16 * PER * CRY\n";
        doc += "  ode PER-CRY = -k5 * PER-CRY + k16 * PER * CRY\n";
        doc += std::string("  ode Rev-Erb = -k6 * Rev-Erb + ") +
               (c.pc1 && c.cb ? "k20 + k21" : "k21") + "\n";
        doc += "  ode REV-ERB = -k7 * REV-ERB + k22 * Rev-Erb\n";
        doc += "  ode CLOCK = -k9 * CLOCK + k24 * Clock - k25 * CLOCK * BMAL\n";
        bool bmal_on = variant == CircadianVariant::NoPerCryDependence ? c.re != 0
                                                                       : (c.pc3 && c.re);
        doc += std::string("  ode Bmal = -k10 * Bmal + ") + (bmal_on ? "k26 + k27" : "k27") + "\n";
        doc += "  ode BMAL = -k11 * BMAL + k28 * Bmal - k25 * CLOCK * BMAL\n";
        doc += "  ode CLOCK-BMAL = -k12 * CLOCK-BMAL + k25 * CLOCK * BMAL\n";
    }

    for (int i = 0; i < 16; i++) {
        for (int j = 0; j < 16; j++) {
            if (i == j || hamming(kCombos[i], kCombos[j]) != 1) continue;
            doc += "transition m" + std::to_string(i + 1) + " m" + std::to_string(j + 1) + " : " +
                   flip_guard(kCombos[i], kCombos[j]) + "\n";
        }
    }

    return parse_model(doc);
}

// ---------------------------------------------------------------------------
// Property suite (the verification batch).
// ---------------------------------------------------------------------------

namespace {

const char* kC1 = "F<=500(![Resting mode])";
const char* kC2 = "F<=500([AP mode]) & F<=500(G<=100([Resting mode]))";
const char* kC3 =
    "F<=500(G<=1([1.4 <= u]) & F<=500([0.8 <= u] & [u <= 1.1] & F<=500(G<=50([1.1 <= u]))))";
const char* kR1 =
    "F<=500([1.5 <= Bmal] & F<=500([Bmal <= 0.8] & F<=500([1.5 <= Bmal] & F<=500([Bmal <= 0.8] & "
    "F<=500([1.5 <= Bmal])))))";
const char* kR2 =
    "F<=500([Bmal <= 0.8] & [2.0 <= Per] & [2.0 <= Cry] & F<=500([1.5 <= Bmal] & [Per <= 0.8] & "
    "[Cry <= 0.8] & F<=500([Bmal <= 0.8] & [2.0 <= Per] & [2.0 <= Cry] & F<=500([1.5 <= Bmal] & "
    "[Per <= 0.8] & [Cry <= 0.8]))))";

std::string cardiac_uri(const char* cell, const char* cond, const char* stim,
                        const char* extra = nullptr) {
    std::string uri = std::string("builtin:cardiac?cell=") + cell + "&cond=" + cond +
                      "&stim=" + stim;
    if (extra) uri += std::string("&") + extra;
    return uri;
}

}  // namespace

std::vector<PropertyCase> property_suite(CaseStudy study) {
    std::vector<PropertyCase> rows;
    if (study == CaseStudy::Cardiac) {
        const char* cells[3] = {"epi", "endo", "mid"};
        const char* cell_names[3] = {"Epicardial", "Endocardial", "Midmyocardial"};
        for (int c = 0; c < 3; c++)
            rows.push_back({"C1", std::string(cell_names[c]) + ", Healthy",
                            cardiac_uri(cells[c], "healthy", "transient"), kC1, true, 459, 500});
        for (int c = 0; c < 3; c++)
            rows.push_back({"C1", std::string(cell_names[c]) + ", Diseased",
                            cardiac_uri(cells[c], "diseased", "transient"), kC1, false, 1, 500});
        for (int c = 0; c < 3; c++)
            rows.push_back({"C2", std::string(cell_names[c]) + ", Transient",
                            cardiac_uri(cells[c], "healthy", "transient"), kC2, true, 459, 600});
        for (int c = 0; c < 3; c++)
            rows.push_back({"C2", std::string(cell_names[c]) + ", Sustained",
                            cardiac_uri(cells[c], "healthy", "sustained"), kC2, false, 1, 600});
        rows.push_back({"C3", "Epicardial, tau_s2=16",
                        cardiac_uri("epi", "healthy", "transient"), kC3, true, 459, 1550});
        rows.push_back({"C3", "Epicardial, tau_s2=2",
                        cardiac_uri("epi", "healthy", "transient", "tau_s2=2"), kC3, false, 1,
                        1550});
        rows.push_back({"C3", "Endocardial",
                        cardiac_uri("endo", "healthy", "transient"), kC3, false, 1, 1550});
        rows.push_back({"C3", "Midmyocardial",
                        cardiac_uri("mid", "healthy", "transient"), kC3, false, 1, 1550});
    } else {
        rows.push_back({"R1", "Wild type", "builtin:circadian?variant=wild", kR1, true, 459,
                        2500});
        rows.push_back({"R1", "Cry mutant", "builtin:circadian?variant=cry-mutant", kR1, false, 1,
                        2500});
        rows.push_back({"R1", "Rev-Erb mutant", "builtin:circadian?variant=rev-erb-mutant", kR1,
                        true, 459, 2500});
        rows.push_back({"R2", "Wild type", "builtin:circadian?variant=wild", kR2, true, 459,
                        2000});
        rows.push_back({"R2", "Without PER-CRY dependence",
                        "builtin:circadian?variant=no-percry-dependence", kR2, false, 1, 2000});
        rows.push_back({"R1", "Without PER-CRY dependence",
                        "builtin:circadian?variant=no-percry-dependence", kR1, true, 459, 2500});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// builtin: URI resolution
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, std::string>> parse_query(std::string_view query) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos < query.size()) {
        std::size_t amp = query.find('&', pos);
        std::string_view kv =
            query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
        std::size_t eq = kv.find('=');
        if (eq == std::string_view::npos)
            throw Error("malformed model query '" + std::string(kv) + "'");
        out.emplace_back(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
        if (amp == std::string_view::npos) break;
        pos = amp + 1;
    }
    return out;
}

}  // namespace

HybridAutomaton builtin_model(std::string_view uri) {
    std::string_view rest = uri;
    if (rest.rfind("builtin:", 0) == 0) rest.remove_prefix(8);
    std::string_view name = rest;
    std::string_view query;
    std::size_t qm = rest.find('?');
    if (qm != std::string_view::npos) {
        name = rest.substr(0, qm);
        query = rest.substr(qm + 1);
    }
    auto params = query.empty() ? std::vector<std::pair<std::string, std::string>>{}
                                : parse_query(query);

    auto take = [&](const char* key, const char* fallback) {
        std::string value = fallback;
        for (auto it = params.begin(); it != params.end();) {
            if (it->first == key) {
                value = it->second;
                it = params.erase(it);
            } else {
                ++it;
            }
        }
        return value;
    };

    HybridAutomaton H;
    if (name == "cardiac") {
        std::string cell = take("cell", "epi");
        std::string cond = take("cond", "healthy");
        std::string stim = take("stim", "transient");
        CellType ct = cell == "epi"    ? CellType::Epi
                      : cell == "endo" ? CellType::Endo
                      : cell == "mid"  ? CellType::Mid
                                       : throw Error("unknown cell type '" + cell + "'");
        CardiacCondition cc = cond == "healthy"    ? CardiacCondition::Healthy
                              : cond == "diseased" ? CardiacCondition::Diseased
                                                   : throw Error("unknown condition '" + cond +
                                                                 "'");
        StimulusProfile sp = stim == "transient"   ? StimulusProfile::Transient
                             : stim == "sustained" ? StimulusProfile::Sustained
                                                   : throw Error("unknown stimulus '" + stim +
                                                                 "'");
        H = cardiac_model(ct, cc, sp);
    } else if (name == "circadian") {
        std::string variant = take("variant", "wild");
        CircadianVariant cv =
            variant == "wild"        ? CircadianVariant::Wild
            : variant == "cry-mutant" ? CircadianVariant::CryMutant
            : variant == "rev-erb-mutant"
                ? CircadianVariant::RevErbMutant
                : variant == "no-percry-dependence"
                      ? CircadianVariant::NoPerCryDependence
                      : throw Error("unknown circadian variant '" + variant + "'");
        H = circadian_model(cv);
    } else {
        throw Error("unknown builtin model '" + std::string(name) + "'");
    }

    // Remaining query keys override named parameters.
    for (const auto& [key, value] : params) {
        auto ref = H.symbols.lookup(key);
        if (!ref || ref->kind != SymbolKind::Parameter)
            throw Error("'" + key + "' is not a parameter of model '" + std::string(name) + "'");
        double v = 0.0;
        auto res = std::from_chars(value.data(), value.data() + value.size(), v);
        if (res.ec != std::errc() || res.ptr != value.data() + value.size())
            throw Error("malformed override value for '" + key + "'");
        H.parameter_values[ref->index] = v;
    }
    return H;
}

}  // namespace hysmc
