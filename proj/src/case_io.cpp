#include "cctlab/case_io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cctlab {

namespace {

BusKind parse_bus_kind(const std::string& s) {
    if (s == "slack") return BusKind::slack;
    if (s == "PV" || s == "pv") return BusKind::pv;
    if (s == "PQ" || s == "pq") return BusKind::pq;
    throw GridError("unknown bus kind '" + s + "'");
}

std::string bus_kind_name(BusKind k) {
    switch (k) {
        case BusKind::slack: return "slack";
        case BusKind::pv: return "PV";
        case BusKind::pq: return "PQ";
    }
    return "PQ";
}

InjectionSource parse_source(const std::string& s) {
    if (s == "fixed") return InjectionSource::fixed;
    if (s == "solar") return InjectionSource::solar;
    if (s == "wind") return InjectionSource::wind;
    throw GridError("unknown injection source '" + s + "'");
}

std::string source_name(InjectionSource s) {
    switch (s) {
        case InjectionSource::fixed: return "fixed";
        case InjectionSource::solar: return "solar";
        case InjectionSource::wind: return "wind";
    }
    return "fixed";
}

}  // namespace

void to_json(nlohmann::json& j, const NetworkCase& net) {
    j = nlohmann::json::object();
    j["system_base"] = net.system_base;
    j["frequency"] = net.frequency;
    auto& buses = j["buses"] = nlohmann::json::array();
    for (const auto& b : net.buses) {
        buses.push_back({{"id", b.id},
                         {"kind", bus_kind_name(b.kind)},
                         {"v_setpoint", b.v_setpoint},
                         {"p_load", b.p_load},
                         {"q_load", b.q_load}});
    }
    auto& lines = j["lines"] = nlohmann::json::array();
    for (const auto& l : net.lines) {
        lines.push_back({{"id", l.id},
                         {"from_bus", l.from_bus},
                         {"to_bus", l.to_bus},
                         {"r", l.r},
                         {"x", l.x},
                         {"b_shunt_total", l.b_shunt_total}});
    }
    auto& machines = j["machines"] = nlohmann::json::array();
    for (const auto& m : net.machines) {
        machines.push_back({{"id", m.id},
                            {"bus", m.bus},
                            {"h", m.h},
                            {"xd_prime", m.xd_prime},
                            {"d", m.d},
                            {"p_gen", m.p_gen}});
    }
    auto& injections = j["injections"] = nlohmann::json::array();
    for (const auto& i : net.injections) {
        injections.push_back({{"bus", i.bus}, {"p", i.p}, {"q", i.q}, {"source", source_name(i.source)}});
    }
}

void from_json(const nlohmann::json& j, NetworkCase& net) {
    net = NetworkCase{};
    net.system_base = j.value("system_base", 100.0);
    net.frequency = j.value("frequency", 60.0);
    for (const auto& b : j.at("buses")) {
        Bus bus;
        bus.id = b.at("id").get<int>();
        bus.kind = parse_bus_kind(b.at("kind").get<std::string>());
        bus.v_setpoint = b.value("v_setpoint", 1.0);
        bus.p_load = b.value("p_load", 0.0);
        bus.q_load = b.value("q_load", 0.0);
        net.buses.push_back(bus);
    }
    for (const auto& l : j.at("lines")) {
        Line line;
        line.id = l.at("id").get<int>();
        line.from_bus = l.at("from_bus").get<int>();
        line.to_bus = l.at("to_bus").get<int>();
        line.r = l.value("r", 0.0);
        line.x = l.at("x").get<double>();
        line.b_shunt_total = l.value("b_shunt_total", 0.0);
        net.lines.push_back(line);
    }
    for (const auto& m : j.at("machines")) {
        Machine machine;
        machine.id = m.at("id").get<int>();
        machine.bus = m.at("bus").get<int>();
        machine.h = m.at("h").get<double>();
        machine.xd_prime = m.at("xd_prime").get<double>();
        machine.d = m.value("d", 0.0);
        machine.p_gen = m.value("p_gen", 0.0);
        net.machines.push_back(machine);
    }
    if (j.contains("injections")) {
        for (const auto& i : j.at("injections")) {
            Injection inj;
            inj.bus = i.at("bus").get<int>();
            inj.p = i.value("p", 0.0);
            inj.q = i.value("q", 0.0);
            inj.source = parse_source(i.value("source", std::string("fixed")));
            net.injections.push_back(inj);
        }
    }
}

void to_json(nlohmann::json& j, const ContingencySpec& c) {
    j = {{"number", c.number},
         {"fault_bus", c.fault_bus},
         {"cleared_lines", c.cleared_lines},
         {"fault_admittance", c.fault_admittance}};
}

void from_json(const nlohmann::json& j, ContingencySpec& c) {
    c.number = j.at("number").get<int>();
    c.fault_bus = j.at("fault_bus").get<int>();
    c.cleared_lines = j.at("cleared_lines").get<std::vector<int>>();
    c.fault_admittance = j.value("fault_admittance", 1e6);
}

void to_json(nlohmann::json& j, const UncertaintySpec& spec) {
    j = nlohmann::json::object();
    auto& loads = j["loads"] = nlohmann::json::array();
    for (const auto& l : spec.loads) {
        loads.push_back({{"base", l.base}, {"lo_frac", l.lo_frac}, {"hi_frac", l.hi_frac}, {"sigma_frac", l.sigma_frac}});
    }
    if (spec.solar) {
        j["solar"] = {{"base", spec.solar->base},
                      {"lo_frac", spec.solar->lo_frac},
                      {"hi_frac", spec.solar->hi_frac},
                      {"alpha", spec.solar->alpha},
                      {"beta_shape", spec.solar->beta_shape}};
    }
    if (spec.wind) {
        const auto w = weibull_from_moments(spec.wind->base, spec.wind->cv);
        j["wind"] = {{"base", spec.wind->base}, {"cv", spec.wind->cv}, {"shape", w.shape}, {"scale", w.scale}};
    }
}

UncertaintySpec uncertainty_from_json(const nlohmann::json& j, UncertaintySpec spec) {
    if (j.contains("loads")) {
        const auto& loads = j.at("loads");
        if (loads.size() != spec.loads.size() && !spec.loads.empty()) {
            throw std::invalid_argument("uncertainty lists " + std::to_string(loads.size()) +
                                        " loads, case has " + std::to_string(spec.loads.size()));
        }
        spec.loads.resize(loads.size());
        for (std::size_t k = 0; k < loads.size(); ++k) {
            auto& l = spec.loads[k];
            l.base = loads[k].value("base", l.base);
            l.lo_frac = loads[k].value("lo_frac", l.lo_frac);
            l.hi_frac = loads[k].value("hi_frac", l.hi_frac);
            l.sigma_frac = loads[k].value("sigma_frac", l.sigma_frac);
        }
    }
    if (j.contains("solar")) {
        const auto& s = j.at("solar");
        if (s.is_null()) {
            spec.solar.reset();
        } else {
            SolarUncertainty solar = spec.solar.value_or(SolarUncertainty{});
            solar.base = s.value("base", solar.base);
            solar.lo_frac = s.value("lo_frac", solar.lo_frac);
            solar.hi_frac = s.value("hi_frac", solar.hi_frac);
            solar.alpha = s.value("alpha", solar.alpha);
            solar.beta_shape = s.value("beta_shape", solar.beta_shape);
            spec.solar = solar;
        }
    }
    if (j.contains("wind")) {
        const auto& w = j.at("wind");
        if (w.is_null()) {
            spec.wind.reset();
        } else {
            WindUncertainty wind = spec.wind.value_or(WindUncertainty{});
            wind.base = w.value("base", wind.base);
            wind.cv = w.value("cv", wind.cv);
            spec.wind = wind;
        }
    }
    spec.validate();
    return spec;
}

void to_json(nlohmann::json& j, const Scenario& s) {
    j = {{"seed_index", s.seed_index}, {"p_loads", s.p_loads}, {"p_solar", s.p_solar}, {"p_wind", s.p_wind}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
    s.seed_index = j.value("seed_index", std::size_t{0});
    s.p_loads = j.at("p_loads").get<std::vector<double>>();
    s.p_solar = j.value("p_solar", 0.0);
    s.p_wind = j.value("p_wind", 0.0);
}

CaseFile parse_case_file(const nlohmann::json& j) {
    CaseFile file;
    const auto& net_json = j.contains("network") ? j.at("network") : j;
    file.network = net_json.get<NetworkCase>();
    file.network.validate();
    if (j.contains("contingencies")) file.contingencies = j.at("contingencies").get<std::vector<ContingencySpec>>();
    for (const auto& c : file.contingencies) validate_contingency(file.network, c);
    file.uncertainty = default_uncertainty(file.network);
    if (j.contains("uncertainty")) file.uncertainty = uncertainty_from_json(j.at("uncertainty"), file.uncertainty);
    return file;
}

CaseFile load_case_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("case file " + path.string() + ": " + e.what());
    }
    return parse_case_file(j);
}

nlohmann::json case_file_to_json(const CaseFile& file) {
    nlohmann::json j = file.network;
    j["contingencies"] = file.contingencies;
    j["uncertainty"] = file.uncertainty;
    return j;
}

std::string case_fingerprint(const NetworkCase& net) {
    const std::string text = nlohmann::json(net).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cctlab
