#include "sysid/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

#include "sysid/harness.hpp"
#include "sysid/serialize.hpp"

namespace sysid {

namespace {

struct Column {
    std::string benchmark;
    std::string test;
    std::string label;
};

const std::vector<Column>& reference_columns() {
    static const std::vector<Column> columns = {
        {"silverbox", "multisine", "SB multisine"},
        {"silverbox", "arrow_full", "SB arrow (full)"},
        {"silverbox", "arrow_no_extrap", "SB arrow (no extrap.)"},
        {"wiener_hammerstein", "test", "W-H test"},
        {"emps", "test", "EMPS test"},
        {"cascaded_tanks", "test", "CT test"},
        {"ced", "test1", "CED test 1"},
        {"ced", "test2", "CED test 2"},
    };
    return columns;
}

std::string row_label(const std::string& model) {
    static const std::map<std::string, std::string> labels = {
        {"lti_ss", "LTI SS"},   {"lti_arx", "LTI ARX"}, {"pnarx", "pNARX"}, {"gp_narx", "GP NARX"},
        {"mlp_narx", "MLP NARX"}, {"mlp_fir", "MLP FIR"}, {"rnn", "RNN"},     {"gru", "GRU"},
        {"lstm", "LSTM"},        {"olstm", "OLSTM"}};
    const auto it = labels.find(model);
    return it == labels.end() ? model : it->second;
}

std::size_t model_rank(const std::string& model) {
    return static_cast<std::size_t>(std::find(kModelIds.begin(), kModelIds.end(), model) - kModelIds.begin());
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string format_display(double value) {
    if (!std::isfinite(value)) return "-";
    if (value == 0.0) return "0.00";
    const int magnitude = static_cast<int>(std::floor(std::log10(std::abs(value))));
    const int decimals = std::max(0, 2 - magnitude);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string emit_table(const std::vector<EvalReport>& reports, TableFormat format) {
    // columns: reference order first, then unknown test sets in order of appearance
    std::vector<Column> columns;
    std::map<std::string, std::string> units;
    for (const auto& r : reports) units.emplace(r.benchmark, r.report_unit);
    for (const auto& c : reference_columns()) {
        const bool present = std::any_of(reports.begin(), reports.end(), [&](const EvalReport& r) {
            return r.benchmark == c.benchmark && r.score(c.test) != nullptr;
        });
        if (present) columns.push_back(c);
    }
    std::vector<const EvalReport*> ordered;
    for (const auto& r : reports) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(), [](const EvalReport* a, const EvalReport* b) {
        return std::make_tuple(model_rank(a->model), a->model) < std::make_tuple(model_rank(b->model), b->model);
    });
    for (const EvalReport* r : ordered) {
        for (const auto& s : r->scores) {
            const bool known = std::any_of(columns.begin(), columns.end(), [&](const Column& c) {
                return c.benchmark == r->benchmark && c.test == s.name;
            });
            if (!known) columns.push_back({r->benchmark, s.name, r->benchmark + " " + s.name});
        }
    }

    std::vector<std::string> models;
    for (const EvalReport* r : ordered) {
        if (std::find(models.begin(), models.end(), r->model) == models.end()) models.push_back(r->model);
    }

    std::vector<std::string> header{"Model"};
    for (const auto& c : columns) {
        const auto& unit = units[c.benchmark];
        header.push_back(unit.empty() ? c.label : c.label + " [" + unit + "]");
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& model : models) {
        std::vector<std::string> row{row_label(model)};
        for (const auto& c : columns) {
            std::string cell = "-";
            for (const EvalReport* r : ordered) {
                if (r->model != model || r->benchmark != c.benchmark) continue;
                if (const TestScore* s = r->score(c.test)) cell = s->failed ? "fail" : format_display(s->display_rmse);
            }
            row.push_back(cell);
        }
        rows.push_back(std::move(row));
    }

    std::string out;
    if (format == TableFormat::csv) {
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
            out += "\r\n";
        };
        line(header);
        for (const auto& r : rows) line(r);
    } else {
        auto line = [&](const std::vector<std::string>& cells) {
            out += "|";
            for (const auto& c : cells) out += " " + c + " |";
            out += "\n";
        };
        line(header);
        out += "|";
        for (std::size_t i = 0; i < header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
        out += "\n";
        for (const auto& r : rows) line(r);
    }
    return out;
}

void write_table(const std::filesystem::path& path, const std::vector<EvalReport>& reports, TableFormat format) {
    write_text_file(path, emit_table(reports, format));
}

}  // namespace sysid
