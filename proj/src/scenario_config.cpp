#include "swmem/scenario_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <regex>
#include <sstream>

#include "json.hpp"

namespace swmem {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s)
{
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        return s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& text, std::size_t line, const std::string& key)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("'" + key + "': expected a number, got '" + t + "'", line, key);
    return v;
}

template <typename Int>
Int to_integer(const std::string& text, std::size_t line, const std::string& key)
{
    const std::string t = trim(text);
    // Accept 1e7-style integers, common for trial counts.
    const double v = to_double(t, line, key);
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e18)
        throw ConfigError("'" + key + "': expected a non-negative integer, got '" + t + "'", line, key);
    return static_cast<Int>(v);
}

std::vector<double> to_list(const std::string& text, std::size_t line, const std::string& key)
{
    std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']')
            throw ConfigError("'" + key + "': unterminated list", line, key);
        t = t.substr(1, t.size() - 2);
    }
    std::vector<double> out;
    std::string item;
    std::stringstream ss(t);
    while (std::getline(ss, item, ',')) {
        std::stringstream inner(item);
        std::string tok;
        while (inner >> tok)
            out.push_back(to_double(tok, line, key));
    }
    return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, std::size_t)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"temperature_uK", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.temperature_uK = to_double(v, l, "temperature_uK"); }},
        {"theta_deg", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.theta_deg = to_double(v, l, "theta_deg"); }},
        {"write_wavelength_nm", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.write_wavelength_nm = to_double(v, l, "write_wavelength_nm"); }},
        {"waist_um", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.waist_um = to_double(v, l, "waist_um"); }},
        {"atom_count", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.atom_count = to_integer<std::size_t>(v, l, "atom_count"); }},
        {"density_per_cm3", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.density_per_cm3 = to_double(v, l, "density_per_cm3"); }},
        {"state_pair", [](ScenarioConfig& c, const std::string& v, std::size_t l) {
             c.state_pair = unquote(trim(v));
             try {
                 parse_state_pair(c.state_pair);
             } catch (const std::exception& e) {
                 throw ConfigError(std::string("'state_pair': ") + e.what(), l, "state_pair");
             }
         }},
        {"bias_field_G", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.bias_field_G = to_double(v, l, "bias_field_G"); }},
        {"gradient_G_per_cm", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.gradient_G_per_cm = to_double(v, l, "gradient_G_per_cm"); }},
        {"chi", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.chi = to_double(v, l, "chi"); }},
        {"eta_s", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.eta_s = to_double(v, l, "eta_s"); }},
        {"eta_as", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.eta_as = to_double(v, l, "eta_as"); }},
        {"background_B", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.background_B = to_double(v, l, "background_B"); }},
        {"delays_us", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.delays_us = to_list(v, l, "delays_us"); }},
        {"trials_per_point", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.trials_per_point = to_integer<std::int64_t>(v, l, "trials_per_point"); }},
        {"seed", [](ScenarioConfig& c, const std::string& v, std::size_t l) { c.seed = to_integer<std::uint64_t>(v, l, "seed"); }},
        {"engine", [](ScenarioConfig& c, const std::string& v, std::size_t l) {
             const std::string s = unquote(trim(v));
             if (s == "analytic")
                 c.engine = Engine::Analytic;
             else if (s == "mc")
                 c.engine = Engine::MonteCarlo;
             else
                 throw ConfigError("'engine': expected 'mc' or 'analytic', got '" + s + "'", l, "engine");
         }},
        {"geometry_mode", [](ScenarioConfig& c, const std::string& v, std::size_t l) {
             const std::string s = unquote(trim(v));
             if (s == "exact")
                 c.geometry_mode = GeometryMode::Exact;
             else if (s == "small-angle")
                 c.geometry_mode = GeometryMode::SmallAngle;
             else
                 throw ConfigError("'geometry_mode': expected 'exact' or 'small-angle', got '" + s + "'", l, "geometry_mode");
         }},
    };
    return table;
}

void apply(ScenarioConfig& cfg, std::map<std::string, std::size_t>& seen, const std::string& key,
           const std::string& value, std::size_t line)
{
    const auto it = setters().find(key);
    if (it == setters().end())
        throw ConfigError("unknown key '" + key + "'", line, key);
    if (!seen.emplace(key, line).second)
        throw ConfigError("duplicate key '" + key + "'", line, key);
    it->second(cfg, value, line);
}

// JSON values become the same textual form the key = value parser accepts.
std::string json_to_text(const nlohmann::json& v, const std::string& key)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_number())
        return v.dump();
    if (v.is_array()) {
        std::string out;
        for (const auto& item : v) {
            if (!item.is_number())
                throw ConfigError("'" + key + "': list entries must be numbers", 0, key);
            out += (out.empty() ? "" : ",") + item.dump();
        }
        return out;
    }
    throw ConfigError("'" + key + "': unsupported JSON value", 0, key);
}

void require(bool ok, const std::string& field, const std::string& what)
{
    if (!ok)
        throw ConfigError("'" + field + "': " + what, 0, field);
}

bool in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

} // namespace

StatePair parse_state_pair(const std::string& text)
{
    static const std::regex re(R"(\s*(\d+)\s*,\s*([+-]?\d+)\s*/\s*(\d+)\s*,\s*([+-]?\d+)\s*)");
    std::smatch m;
    if (!std::regex_match(text, m, re))
        throw DomainError("state pair must look like 'F,mF/F,mF', got '" + text + "'");
    StatePair pair{{std::stoi(m[1]), std::stoi(m[2])}, {std::stoi(m[3]), std::stoi(m[4])}};
    ZeemanConfig probe;
    probe.pair = pair;
    probe.validate();
    return pair;
}

std::string format_state_pair(const StatePair& p)
{
    return std::to_string(p.g.f) + "," + std::to_string(p.g.m_f) + "/" + std::to_string(p.s.f) + "," +
           std::to_string(p.s.m_f);
}

void ScenarioConfig::validate() const
{
    require(std::isfinite(temperature_uK) && temperature_uK > 0.0, "temperature_uK", "must be positive");
    require(std::isfinite(theta_deg) && theta_deg >= 0.0 && theta_deg < 90.0, "theta_deg", "must lie in [0, 90)");
    require(std::isfinite(write_wavelength_nm) && write_wavelength_nm > 0.0, "write_wavelength_nm", "must be positive");
    require(std::isfinite(waist_um) && waist_um > 0.0, "waist_um", "must be positive");
    require(atom_count >= 1, "atom_count", "must be at least 1");
    require(std::isfinite(density_per_cm3) && density_per_cm3 >= 0.0, "density_per_cm3", "must be non-negative");
    require(std::isfinite(bias_field_G), "bias_field_G", "must be finite");
    require(std::isfinite(gradient_G_per_cm), "gradient_G_per_cm", "must be finite");
    require(in_unit(chi), "chi", "must lie in [0, 1]");
    require(in_unit(eta_s), "eta_s", "must lie in [0, 1]");
    require(in_unit(eta_as), "eta_as", "must lie in [0, 1]");
    require(in_unit(background_B), "background_B", "must lie in [0, 1]");
    require(!delays_us.empty(), "delays_us", "at least one delay is required");
    for (std::size_t i = 0; i < delays_us.size(); ++i) {
        require(std::isfinite(delays_us[i]) && delays_us[i] >= 0.0, "delays_us", "delays must be non-negative");
        require(i == 0 || delays_us[i] > delays_us[i - 1], "delays_us", "delays must be strictly increasing");
    }
    require(trials_per_point >= 1, "trials_per_point", "must be at least 1");
    try {
        parse_state_pair(state_pair);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("'state_pair': ") + e.what(), 0, "state_pair");
    }
    if (geometry_mode == GeometryMode::SmallAngle)
        require(theta_deg > 0.0, "theta_deg", "small-angle geometry needs theta > 0");
}

Scenario ScenarioConfig::to_scenario() const
{
    validate();
    Scenario s;
    s.ensemble.temperature = temperature_uK * constants::kMicro;
    s.ensemble.density = density_per_cm3 * constants::kPerCubicCm;
    s.ensemble.cloud_radius_r0 = waist_um * constants::kMicro;
    s.ensemble.atom_count = atom_count;
    s.geometry.write_wavelength = write_wavelength_nm * 1e-9;
    s.geometry.detection_angle_theta = constants::deg_to_rad(theta_deg);
    s.geometry.mode = geometry_mode;
    s.zeeman.pair = parse_state_pair(state_pair);
    s.zeeman.bias_field = bias_field_G * constants::kGauss;
    s.zeeman.field_gradient = gradient_G_per_cm * constants::kGaussPerCm;
    s.detection = {chi, eta_s, eta_as, background_B};
    s.engine = engine;
    return s;
}

std::vector<double> ScenarioConfig::delays_seconds() const
{
    std::vector<double> out;
    out.reserve(delays_us.size());
    for (double d : delays_us)
        out.push_back(d * constants::kMicro);
    return out;
}

ScenarioConfig parse_scenario_config(std::istream& is, std::optional<std::uint64_t> default_seed)
{
    const std::string text{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    ScenarioConfig cfg;
    std::map<std::string, std::size_t> seen; // key -> line

    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            // Byte offset -> line number.
            const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
            const auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n')) + 1;
            throw ConfigError(std::string("malformed JSON: ") + e.what(), line, "");
        }
        if (!doc.is_object())
            throw ConfigError("JSON config must be an object", 1, "");
        for (const auto& [key, value] : doc.items())
            apply(cfg, seen, key, json_to_text(value, key), 0);
    } else {
        std::istringstream lines(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find_first_of("=:");
            if (eq == std::string::npos)
                throw ConfigError("expected 'key = value'", line_no, "");
            apply(cfg, seen, unquote(trim(line.substr(0, eq))), line.substr(eq + 1), line_no);
        }
    }

    if (!seen.contains("delays_us"))
        throw ConfigError("'delays_us': missing required key", 0, "delays_us");
    if (!seen.contains("seed") && default_seed)
        cfg.seed = *default_seed;
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const auto it = seen.find(e.field());
        if (e.line() == 0 && it != seen.end() && it->second > 0)
            throw ConfigError(e.what(), it->second, e.field());
        throw;
    }
    return cfg;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path, std::optional<std::uint64_t> default_seed)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'", 0, "");
    return parse_scenario_config(in, default_seed);
}

std::optional<std::uint64_t> seed_from_environment()
{
    const char* env = std::getenv(kSeedEnvVar);
    if (!env || !*env)
        return std::nullopt;
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc{} || ptr != end)
        return std::nullopt;
    return v;
}

void write_scenario_config(std::ostream& os, const ScenarioConfig& c)
{
    os << "temperature_uK = " << format_sig6(c.temperature_uK) << '\n'
       << "theta_deg = " << format_sig6(c.theta_deg) << '\n'
       << "write_wavelength_nm = " << format_sig6(c.write_wavelength_nm) << '\n'
       << "waist_um = " << format_sig6(c.waist_um) << '\n'
       << "atom_count = " << c.atom_count << '\n'
       << "density_per_cm3 = " << format_sig6(c.density_per_cm3) << '\n'
       << "state_pair = " << c.state_pair << '\n'
       << "bias_field_G = " << format_sig6(c.bias_field_G) << '\n'
       << "gradient_G_per_cm = " << format_sig6(c.gradient_G_per_cm) << '\n'
       << "chi = " << format_sig6(c.chi) << '\n'
       << "eta_s = " << format_sig6(c.eta_s) << '\n'
       << "eta_as = " << format_sig6(c.eta_as) << '\n'
       << "background_B = " << format_sig6(c.background_B) << '\n'
       << "delays_us = ";
    for (std::size_t i = 0; i < c.delays_us.size(); ++i)
        os << (i ? ", " : "") << format_sig6(c.delays_us[i]);
    os << '\n'
       << "trials_per_point = " << c.trials_per_point << '\n'
       << "seed = " << c.seed << '\n'
       << "engine = " << (c.engine == Engine::Analytic ? "analytic" : "mc") << '\n'
       << "geometry_mode = " << (c.geometry_mode == GeometryMode::Exact ? "exact" : "small-angle") << '\n';
}

} // namespace swmem
