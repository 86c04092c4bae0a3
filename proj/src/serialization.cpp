#include "ghzsim/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace ghz {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void dump_into(std::ostringstream& out, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out << "{}";
            return;
        }
        out << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out << ',' << nl;
            first = false;
            out << pad << Json(it.key()).dump() << (indent > 0 ? ": " : ":");
            dump_into(out, it.value(), indent, depth + 1);
        }
        out << nl << close_pad << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out << "[]";
            return;
        }
        out << '[' << nl;
        bool first = true;
        for (const auto& v : j) {
            if (!first) out << ',' << nl;
            first = false;
            out << pad;
            dump_into(out, v, indent, depth + 1);
        }
        out << nl << close_pad << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        out << (std::isfinite(v) ? format_double(v) : "null");
        return;
    }
    default:
        out << j.dump();
    }
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
    std::ostringstream out;
    dump_into(out, j, indent, 0);
    out << '\n';
    return out.str();
}

Json to_json(const Estimate& e) { return Json{{"value", e.value}, {"sigma", e.sigma}}; }

Json to_json(const CountRecord& r) {
    Json counts = Json::object();
    for (std::size_t k = 0; k < r.counts.size(); ++k) counts[r.setting.outcome_label(k)] = r.counts[k];
    Json meta = Json::object();
    for (const auto& [k, v] : r.metadata) meta[k] = v;
    return Json{{"setting", r.setting.label()},
                {"counts", counts},
                {"total", r.total()},
                {"duration", r.duration},
                {"metadata", meta}};
}

Json to_json(const WitnessResult& w) {
    return Json{{"e_xxx", to_json(w.e_xxx)},
                {"e_1zz", to_json(w.e_1zz)},
                {"e_z1z", to_json(w.e_z1z)},
                {"e_zz1", to_json(w.e_zz1)},
                {"w_value", to_json(w.w_value)},
                {"fidelity_lower_bound", to_json(w.fidelity_lower_bound)},
                {"w_sigma_quadrature", w.w_sigma_quadrature},
                {"bootstrapped", w.bootstrapped}};
}

Json to_json(const SinusoidFit& f) {
    return Json{{"amplitude", f.amplitude},
                {"amplitude_sigma", f.amplitude_sigma},
                {"phase_offset", f.phase_offset},
                {"phase_offset_sigma", f.phase_offset_sigma},
                {"residual_rms", f.residual_rms}};
}

Json to_json(const SourceConfig& c) {
    return Json{{"theta", c.theta},
                {"phi", c.phi},
                {"theta_prime", c.theta_prime},
                {"phi_prime", c.phi_prime},
                {"triplet_phase_mode",
                 c.triplet_phase_mode == PhaseMode::combined ? "combined" : "explicit"},
                {"triplet_phase", c.triplet_phase},
                {"white_noise", c.white_noise},
                {"dephasing_visibility", c.dephasing_visibility},
                {"background_fraction", c.background_fraction},
                {"background_state", c.background_state},
                {"pair_source", c.pair_source == PairSource::ppktp ? "ppktp" : "ppln"},
                {"pair_rate_1", c.pair_rate_1},
                {"pair_rate_2", c.pair_rate_2},
                {"triplet_rate", c.triplet_rate},
                {"dark_rate", c.dark_rate},
                {"channel_efficiency", c.channel_efficiency},
                {"cascade_coupling", c.cascade_coupling},
                {"coincidence_window", c.coincidence_window},
                {"timing_jitter", c.timing_jitter}};
}

Json matrix_to_json(const CMatrix& m) {
    Json re = Json::array();
    Json im = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json rr = Json::array();
        Json ri = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(m(r, c).real());
            ri.push_back(m(r, c).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return Json{{"real", re}, {"imag", im}};
}

CountRecord count_record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("count record must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "setting" && key != "counts" && key != "duration" && key != "metadata" &&
            key != "total") {
            throw std::invalid_argument("unknown count record key '" + key + "'");
        }
    }
    const auto setting = MeasurementSetting::parse(j.at("setting").get<std::string>());
    std::vector<std::uint64_t> counts(setting.outcome_count(), 0);
    for (const auto& [outcome, n] : j.at("counts").items()) {
        if (!n.is_number_unsigned() && !(n.is_number_integer() && n.get<std::int64_t>() >= 0)) {
            throw std::invalid_argument("counts must be nonnegative integers");
        }
        counts[setting.outcome_index(outcome)] = n.get<std::uint64_t>();
    }
    CountRecord r(setting, std::move(counts), j.value("duration", 0.0));
    if (j.contains("metadata")) {
        for (const auto& [k, v] : j.at("metadata").items()) {
            r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    if (j.contains("total") && j.at("total").get<std::uint64_t>() != r.total()) {
        throw std::invalid_argument("count record total does not match its counts");
    }
    return r;
}

std::vector<CountRecord> count_records_from_json(const nlohmann::json& j) {
    const nlohmann::json* list = &j;
    if (j.is_object() && j.contains("records")) list = &j.at("records");
    if (!list->is_array()) throw std::invalid_argument("expected an array of count records");
    std::vector<CountRecord> out;
    for (const auto& item : *list) out.push_back(count_record_from_json(item));
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw std::invalid_argument("CSV row width mismatch");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out.push_back(',');
            out += cells[i];
        }
        out.push_back('\n');
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace ghz
