#include "cherenkov/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

namespace cherenkov {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string t = trim(s);
    if (t.empty()) return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& key, const std::string& s) {
    std::string t = trim(s);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& s) {
    std::string t = trim(s);
    long long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
    std::string t = trim(s);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
    return v;
}

bool to_bool(const std::string& key, const std::string& s) {
    std::string t = trim(s);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

Vec3 to_vec3(const std::string& key, const std::string& s) {
    auto items = split_list(s);
    if (items.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
    return {to_double(key, items[0]), to_double(key, items[1]), to_double(key, items[2])};
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
    std::vector<double> out;
    for (const auto& it : split_list(s)) out.push_back(to_double(key, it));
    return out;
}

std::string choice(const std::string& key, const std::string& s, std::initializer_list<const char*> allowed) {
    std::string t = trim(s);
    for (const char* a : allowed)
        if (t == a) return t;
    std::string msg = key + ": '" + t + "' is not one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg);
}

std::string fmt(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

std::string fmt(const Vec3& v) { return fmt(v[0]) + ", " + fmt(v[1]) + ", " + fmt(v[2]); }

std::string fmt(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string fmt(const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
}

std::string fmt(bool b) { return b ? "true" : "false"; }

struct Key {
    std::string section, name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define NUM(sec, nm, field)                                                                                   \
    Key {                                                                                                     \
        sec, nm, [](const ExperimentConfig& c) { return fmt(c.field); },                                      \
            [](ExperimentConfig& c, const std::string& v) { c.field = to_double(sec "." nm, v); }             \
    }
#define INT(sec, nm, field)                                                                                   \
    Key {                                                                                                     \
        sec, nm, [](const ExperimentConfig& c) { return std::to_string(c.field); },                           \
            [](ExperimentConfig& c, const std::string& v) {                                                   \
                c.field = static_cast<decltype(c.field)>(to_int(sec "." nm, v));                              \
            }                                                                                                 \
    }
#define BOOL(sec, nm, field)                                                                                  \
    Key {                                                                                                     \
        sec, nm, [](const ExperimentConfig& c) { return fmt(c.field); },                                      \
            [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(sec "." nm, v); }               \
    }
#define VEC(sec, nm, field)                                                                                   \
    Key {                                                                                                     \
        sec, nm, [](const ExperimentConfig& c) { return fmt(c.field); },                                      \
            [](ExperimentConfig& c, const std::string& v) { c.field = to_vec3(sec "." nm, v); }               \
    }

const std::vector<Key>& registry() {
    static const std::vector<Key> keys = {
        NUM("model", "m", params.mass_gas),
        NUM("model", "M", params.mass_particle),
        NUM("model", "lambda", params.lambda),
        NUM("model", "rho0", params.rho0),
        Key{"model", "n", [](const ExperimentConfig& c) { return fmt(c.params.n_exponent); },
            [](ExperimentConfig& c, const std::string& v) {
                c.params.n_exponent = to_double("model.n", v);
                c.spec.n_exponent = c.params.n_exponent;
            }},
        BOOL("model", "rescaled", params.rescaled),
        Key{"model", "potential",
            [](const ExperimentConfig& c) { return std::string(c.spec.profile == Profile::gaussian ? "gaussian" : "custom"); },
            [](ExperimentConfig& c, const std::string& v) {
                c.spec.profile = choice("model.potential", v, {"gaussian", "custom"}) == "gaussian" ? Profile::gaussian
                                                                                                  : Profile::custom;
            }},
        NUM("model", "width", spec.width),
        NUM("model", "amplitude", spec.amplitude),
        Key{"model", "eps0", [](const ExperimentConfig& c) { return fmt(c.spec.decay_rate); },
            [](ExperimentConfig& c, const std::string& v) {
                c.spec.decay_rate = to_double("model.eps0", v);
                c.run.eps0 = c.spec.decay_rate;
            }},
        Key{"model", "custom_k", [](const ExperimentConfig& c) { return fmt(c.spec.k_samples); },
            [](ExperimentConfig& c, const std::string& v) { c.spec.k_samples = to_doubles("model.custom_k", v); }},
        Key{"model", "custom_vhat", [](const ExperimentConfig& c) { return fmt(c.spec.vhat_samples); },
            [](ExperimentConfig& c, const std::string& v) { c.spec.vhat_samples = to_doubles("model.custom_vhat", v); }},

        INT("run", "points", grid.points),
        NUM("run", "box", grid.box_length),
        NUM("run", "sponge_width", grid.sponge_width),
        NUM("run", "sponge_strength", grid.sponge_strength),
        BOOL("run", "sponge", run.sponge),
        NUM("run", "dt", run.dt),
        NUM("run", "horizon", run.horizon),
        INT("run", "stride", run.stride),
        BOOL("run", "supersonic", run.supersonic),
        VEC("run", "P0", ic.P0),
        VEC("run", "X0", ic.X0),
        Key{"run", "beta0",
            [](const ExperimentConfig& c) {
                return std::string(c.ic.beta0 == InitialConditions::Beta0::vacuum ? "vacuum" : "gaussian_packet");
            },
            [](ExperimentConfig& c, const std::string& v) {
                c.ic.beta0 = choice("run.beta0", v, {"vacuum", "gaussian_packet"}) == "vacuum"
                                 ? InitialConditions::Beta0::vacuum
                                 : InitialConditions::Beta0::gaussian_packet;
            }},
        NUM("run", "packet_amplitude", ic.amplitude),
        NUM("run", "packet_width", ic.width),
        VEC("run", "packet_center", ic.center),
        Key{"run", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("run.seed", v); }},
        INT("run", "threads", threads),

        Key{"friction", "p_values", [](const ExperimentConfig& c) { return fmt(c.friction.p_values); },
            [](ExperimentConfig& c, const std::string& v) { c.friction.p_values = to_doubles("friction.p_values", v); }},
        Key{"friction", "method", [](const ExperimentConfig& c) { return c.friction.method; },
            [](ExperimentConfig& c, const std::string& v) {
                c.friction.method = choice("friction.method", v, {"delta", "eps", "both"});
            }},

        Key{"kernel", "regime", [](const ExperimentConfig& c) { return c.kernel.regime; },
            [](ExperimentConfig& c, const std::string& v) {
                c.kernel.regime = choice("kernel.regime", v, {"generic", "near_sonic"});
            }},
        NUM("kernel", "tau_min", kernel.tau_min),
        NUM("kernel", "tau_max", kernel.tau_max),
        INT("kernel", "tau_points", kernel.tau_points),
        VEC("kernel", "Q1", kernel.Q1),
        VEC("kernel", "Q2", kernel.Q2),
        Key{"kernel", "method", [](const ExperimentConfig& c) { return c.kernel.method; },
            [](ExperimentConfig& c, const std::string& v) {
                c.kernel.method = choice("kernel.method", v, {"automatic", "contour", "regularized"});
            }},
        NUM("kernel", "gamma", kernel.gamma),
        BOOL("kernel", "rotate", kernel.rotate),

        NUM("effective", "horizon", effective.horizon),
        INT("effective", "samples", effective.samples),
        NUM("effective", "tail_decades", effective.tail_decades),

        BOOL("wave", "compare", wave.compare),

        Key{"sweep", "parameter", [](const ExperimentConfig& c) { return c.sweep.parameter; },
            [](ExperimentConfig& c, const std::string& v) { c.sweep.parameter = trim(v); }},
        Key{"sweep", "values", [](const ExperimentConfig& c) { return fmt(c.sweep.values); },
            [](ExperimentConfig& c, const std::string& v) { c.sweep.values = split_list(v); }},
        Key{"sweep", "command", [](const ExperimentConfig& c) { return c.sweep.command; },
            [](ExperimentConfig& c, const std::string& v) {
                c.sweep.command = choice("sweep.command", v,
                                         {"simulate", "friction-table", "effective-ode", "kernel-decay",
                                          "traveling-wave", "fgr-check"});
            }},

        Key{"output", "dir", [](const ExperimentConfig& c) { return c.output.dir; },
            [](ExperimentConfig& c, const std::string& v) { c.output.dir = trim(v); }},
        Key{"output", "formats", [](const ExperimentConfig& c) { return fmt(c.output.formats); },
            [](ExperimentConfig& c, const std::string& v) {
                c.output.formats.clear();
                for (const auto& f : split_list(v))
                    c.output.formats.push_back(choice("output.formats", f, {"csv", "json", "binary"}));
            }},
        INT("output", "snapshot_every", output.snapshot_every),
    };
    return keys;
}

#undef NUM
#undef INT
#undef BOOL
#undef VEC

const Key* find_key(const std::string& section, const std::string& name) {
    for (const auto& k : registry())
        if (k.section == section && k.name == name) return &k;
    return nullptr;
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.grid.sponge_width = 6.0;
    c.grid.sponge_strength = 1.0;
    c.ic.P0 = {1.5, 0, 0};
    c.friction.p_values = {0.5, 0.9, 1.0};
    for (double q : logspace(1e-3, 1e-1, 9)) c.friction.p_values.push_back(1.0 + q);
    for (double p : {1.5, 2.0, 5.0}) c.friction.p_values.push_back(p);
    return c;
}

void validate_config(const ExperimentConfig& c) {
    try {
        c.params.validate();
        c.grid.validate(c.spec.width);
    } catch (const InvalidSpec& e) {
        throw ConfigError(e.what());
    }
    if (c.spec.profile == Profile::custom) {
        if (c.spec.k_samples.size() < 4 || c.spec.k_samples.size() != c.spec.vhat_samples.size())
            throw ConfigError("model.custom_k / custom_vhat: need matching lists with at least 4 entries");
    }
    if (!(c.run.dt > 0.0)) throw ConfigError("run.dt must be positive");
    if (!(c.run.horizon >= 0.0)) throw ConfigError("run.horizon must be nonnegative");
    if (c.run.stride < 1) throw ConfigError("run.stride must be >= 1");
    if (c.threads < 1) throw ConfigError("run.threads must be >= 1");
    for (double p : c.friction.p_values)
        if (!(p > 0.0)) throw ConfigError("friction.p_values must be positive");
    if (!(c.kernel.tau_min > 0.0 && c.kernel.tau_max > c.kernel.tau_min))
        throw ConfigError("kernel: need 0 < tau_min < tau_max");
    if (c.kernel.tau_points < 2) throw ConfigError("kernel.tau_points must be >= 2");
    if (!(c.kernel.gamma > 0.0 && c.kernel.gamma <= kPi / 6 + 1e-15))
        throw ConfigError("kernel.gamma must lie in (0, pi/6]");
    if (!(c.effective.horizon > 0.0) || c.effective.samples < 2 || !(c.effective.tail_decades > 0.0))
        throw ConfigError("effective: horizon > 0, samples >= 2, tail_decades > 0 required");
    if (!c.sweep.parameter.empty()) {
        auto dot = c.sweep.parameter.find('.');
        if (dot == std::string::npos ||
            !find_key(c.sweep.parameter.substr(0, dot), c.sweep.parameter.substr(dot + 1)))
            throw ConfigError("sweep.parameter: unknown key '" + c.sweep.parameter + "'");
        if (c.sweep.parameter.rfind("sweep.", 0) == 0 || c.sweep.parameter.rfind("output.", 0) == 0)
            throw ConfigError("sweep.parameter: cannot sweep over sweep or output keys");
    }
    if (c.output.snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
}

ExperimentConfig parse_config(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    ExperimentConfig c = default_config();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigError("key '" + section + "' outside of a section");
        for (const auto& [name, value] : body) {
            const Key* k = find_key(section, name);
            if (!k) throw ConfigError("unknown key " + section + "." + name);
            k->set(c, value.data());
        }
    }
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out, current;
    for (const auto& k : registry()) {
        if (k.section != current) {
            if (!current.empty()) out += "\n";
            out += "[" + k.section + "]\n";
            current = k.section;
        }
        out += k.name + " = " + k.get(cfg) + "\n";
    }
    return out;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

std::string config_id(const ExperimentConfig& cfg) {
    std::string text;
    for (const auto& k : registry())
        if (k.section != "output") text += k.section + "." + k.name + "=" + k.get(cfg) + "\n";
    return sha256_hex(text).substr(0, 16);
}

void set_config_value(ExperimentConfig& cfg, const std::string& dotted, const std::string& value) {
    auto dot = dotted.find('.');
    if (dot == std::string::npos) throw ConfigError("expected section.key, got '" + dotted + "'");
    const Key* k = find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
    if (!k) throw ConfigError("unknown key " + dotted);
    k->set(cfg, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : registry()) out.push_back(k.section + "." + k.name);
    return out;
}

} // namespace cherenkov
