#include "copo/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace copo {

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
    if (!out) throw Error("write failed for " + path);
}

struct Series {
    std::string method;
    std::vector<double> x, y, se;
};

const char* kPalette[] = {"#1f6fb4", "#d1495b", "#2e8b57", "#8c6bb1", "#e0a100", "#4d4d4d"};

}  // namespace

std::string records_to_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    out << "sweep_param,sweep_value,replicate,method,h,weighted_loss,snr,snr_mod,snr_exc,iters,wall_ms\n";
    for (const auto& r : records) {
        out << csv_field(r.sweep_param) << ',' << fmt17(r.sweep_value) << ',' << r.replicate << ','
            << csv_field(r.method) << ',' << fmt17(r.h) << ',' << fmt17(r.weighted_loss) << ','
            << fmt17(r.snr) << ',' << fmt17(r.snr_mod) << ',' << fmt17(r.snr_exc) << ',' << r.iters
            << ',' << fmt17(r.wall_ms) << '\n';
    }
    return out.str();
}

std::string summary_to_csv(const std::vector<SummaryCell>& summary) {
    std::ostringstream out;
    out << "sweep_param,sweep_value,method,n_reps,h_mean,h_se,weighted_loss_mean,weighted_loss_se,"
           "snr_mean,snr_mod_mean,snr_exc_mean\n";
    for (const auto& c : summary) {
        out << csv_field(c.sweep_param) << ',' << fmt17(c.sweep_value) << ',' << csv_field(c.method)
            << ',' << c.n_reps << ',' << fmt17(c.h_mean) << ',' << fmt17(c.h_se) << ','
            << fmt17(c.weighted_loss_mean) << ',' << fmt17(c.weighted_loss_se) << ','
            << fmt17(c.snr_mean) << ',' << fmt17(c.snr_mod_mean) << ',' << fmt17(c.snr_exc_mean)
            << '\n';
    }
    return out.str();
}

std::string svg_chart(const std::vector<SummaryCell>& summary, const std::string& metric) {
    std::vector<Series> series;
    for (const auto& c : summary) {
        double mean, se;
        if (metric == "h") {
            mean = c.h_mean;
            se = c.h_se;
        } else if (metric == "weighted_loss") {
            mean = c.weighted_loss_mean;
            se = c.weighted_loss_se;
        } else {
            throw ParameterError("svg_chart: unknown metric " + metric);
        }
        if (std::isnan(mean)) continue;
        Series* s = nullptr;
        for (auto& existing : series)
            if (existing.method == c.method) s = &existing;
        if (!s) {
            series.push_back(Series{c.method, {}, {}, {}});
            s = &series.back();
        }
        s->x.push_back(c.sweep_value);
        s->y.push_back(mean);
        s->se.push_back(std::isnan(se) ? 0.0 : se);
    }

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1e-12;
    bool first = true;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymax = std::max(ymax, s.y[i] + s.se[i]);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    ymax *= 1.08;

    const double w = 640, h = 420, ml = 70, mr = 150, mt = 24, mb = 52;
    const double pw = w - ml - mr, ph = h - mt - mb;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";

    for (int t = 0; t <= 5; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 5.0;
        const double yv = ymin + (ymax - ymin) * t / 5.0;
        out << "<line x1=\"" << fmt6(sx(xv)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt6(sx(xv))
            << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt6(sx(xv)) << "\" y=\"" << mt + ph + 20
            << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt6(xv) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt6(sy(yv)) << "\" x2=\"" << ml
            << "\" y2=\"" << fmt6(sy(yv)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << fmt6(sy(yv) + 4)
            << "\" font-size=\"11\" text-anchor=\"end\">" << fmt6(yv) << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 14
        << "\" font-size=\"13\" text-anchor=\"middle\">sweep value</text>\n";
    out << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
        << ")\">mean " << metric << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << fmt6(sx(s.x[i])) << ',' << fmt6(sy(s.y[i])) << ' ';
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double cx = sx(s.x[i]);
            out << "<line x1=\"" << fmt6(cx) << "\" y1=\"" << fmt6(sy(s.y[i] - s.se[i]))
                << "\" x2=\"" << fmt6(cx) << "\" y2=\"" << fmt6(sy(s.y[i] + s.se[i]))
                << "\" stroke=\"" << color << "\"/>\n";
            out << "<circle cx=\"" << fmt6(cx) << "\" cy=\"" << fmt6(sy(s.y[i]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        const double ly = mt + 16 + 18 * static_cast<double>(si);
        out << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << fmt6(ly - 4) << "\" x2=\""
            << ml + pw + 34 << "\" y2=\"" << fmt6(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << ml + pw + 40 << "\" y=\"" << fmt6(ly)
            << "\" font-size=\"12\">" << s.method << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<std::string> emit_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    if (result.records.empty()) throw Error("emit_outputs: no records");
    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> written;

    const std::string base = cfg.output_dir + "/" + cfg.experiment;
    write_file(base + "_raw.csv", records_to_csv(result.records));
    written.push_back(base + "_raw.csv");
    write_file(base + "_summary.csv", summary_to_csv(result.summary));
    written.push_back(base + "_summary.csv");
    write_file(base + "_h.svg", svg_chart(result.summary, "h"));
    written.push_back(base + "_h.svg");

    bool any_wl = false;
    for (const auto& c : result.summary)
        if (!std::isnan(c.weighted_loss_mean)) any_wl = true;
    if (any_wl) {
        write_file(base + "_weighted_loss.svg", svg_chart(result.summary, "weighted_loss"));
        written.push_back(base + "_weighted_loss.svg");
    }
    return written;
}

namespace {

std::vector<std::vector<std::string>> parse_csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(row);
        row.clear();
    };
    while (i < n) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    continue;
                }
                quoted = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
            ++i;
            continue;
        }
        if (c == ',') {
            end_field();
            ++i;
            continue;
        }
        if (c == '\r') {
            ++i;
            continue;
        }
        if (c == '\n') {
            end_row();
            ++i;
            continue;
        }
        field += c;
        field_started = true;
        ++i;
    }
    if (quoted) throw ParseError("unterminated quoted field", rows.size() + 1, row.size() + 1);
    if (field_started || !row.empty()) end_row();
    return rows;
}

}  // namespace

IngestResult parse_csv_text(const std::string& text, bool has_header,
                            std::optional<int> label_column) {
    auto rows = parse_csv_rows(text);
    std::size_t start = 0;
    if (has_header) {
        if (rows.empty()) throw ParseError("missing header row", 1, 1);
        start = 1;
    }
    if (start >= rows.size()) throw ParseError("no data rows", start + 1, 1);

    const std::size_t width = rows[start].size();
    if (width == 0) throw ParseError("empty row", start + 1, 1);
    if (label_column && (*label_column < 0 || static_cast<std::size_t>(*label_column) >= width))
        throw ParseError("label column out of range", start + 1,
                         static_cast<std::size_t>(*label_column) + 1);

    const std::size_t nrows = rows.size() - start;
    const std::size_t ncols = label_column ? width - 1 : width;
    if (ncols == 0) throw ParseError("no numeric columns", start + 1, 1);

    IngestResult res;
    res.data.resize(static_cast<Index>(nrows), static_cast<Index>(ncols));
    std::vector<std::string> label_names;
    LabelVector labels;

    for (std::size_t r = 0; r < nrows; ++r) {
        const auto& row = rows[start + r];
        if (row.size() != width)
            throw ParseError("ragged row: expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(row.size()),
                             start + r + 1, row.size());
        Index out_c = 0;
        for (std::size_t c = 0; c < width; ++c) {
            if (label_column && static_cast<std::size_t>(*label_column) == c) {
                const std::string& name = row[c];
                int id = -1;
                for (std::size_t j = 0; j < label_names.size(); ++j)
                    if (label_names[j] == name) id = static_cast<int>(j);
                if (id < 0) {
                    id = static_cast<int>(label_names.size());
                    label_names.push_back(name);
                }
                labels.push_back(id);
                continue;
            }
            const std::string& cell = row[c];
            char* endp = nullptr;
            const double v = std::strtod(cell.c_str(), &endp);
            if (cell.empty() || endp != cell.c_str() + cell.size() || !std::isfinite(v))
                throw ParseError("non-numeric cell '" + cell + "'", start + r + 1, c + 1);
            res.data(static_cast<Index>(r), out_c++) = v;
        }
    }
    if (label_column) {
        res.labels = std::move(labels);
        res.label_count = static_cast<int>(label_names.size());
    }
    return res;
}

IngestResult ingest_csv(const std::string& path, bool has_header, std::optional<int> label_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_text(buf.str(), has_header, label_column);
}

}  // namespace copo
