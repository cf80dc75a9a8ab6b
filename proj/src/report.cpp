#include "fsaudit/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fsaudit/errors.hpp"

namespace fsaudit {

using nlohmann::json;

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

void require_records(const std::vector<ResultRecord>& records) {
    if (records.empty()) throw ConfigError("emit_report: no records");
}

}  // namespace

void emit_jsonl(const std::vector<ResultRecord>& records,
                const std::filesystem::path& file) {
    require_records(records);
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    for (const auto& rec : records) out << rec.to_json().dump() << "\n";
}

std::vector<json> load_jsonl(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read " + file.string());
    std::vector<json> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(json::parse(line));
    }
    return records;
}

void emit_table(const std::vector<ResultRecord>& records,
                const std::filesystem::path& csv_file,
                const std::filesystem::path& txt_file) {
    require_records(records);

    std::ofstream csv(csv_file);
    if (!csv) throw DataError("cannot write " + csv_file.string());
    csv << "dataset,architecture,defense,auc_mean,auc_std,accuracy_mean,accuracy_std,"
           "f1_mean,f1_std,fpr_mean,fpr_std,no_reference_auc,li_baseline_auc,"
           "target_train_acc,target_test_acc,overfitting\n";
    for (const auto& rec : records) {
        const EvalReport fa = rec.face_auditor_report();
        const EvalMetrics mean = fa.mean(), sd = fa.stddev();
        double train_acc = 0.0, test_acc = 0.0;
        for (const auto& run : rec.per_run) {
            train_acc += run.target_train_acc;
            test_acc += run.target_test_acc;
        }
        train_acc /= static_cast<double>(rec.per_run.size());
        test_acc /= static_cast<double>(rec.per_run.size());
        const std::string dataset =
            rec.transfer ? rec.transfer->shadow_dataset + "->" + rec.transfer->target_dataset
                         : rec.config.dataset.name;
        csv << dataset << "," << rec.architecture << "," << rec.defense.label() << ","
            << fmt(mean.auc) << "," << fmt(sd.auc) << "," << fmt(mean.accuracy) << ","
            << fmt(sd.accuracy) << "," << fmt(mean.f1) << "," << fmt(sd.f1) << ","
            << fmt(mean.fpr) << "," << fmt(sd.fpr) << ",";
        const EvalReport nr = rec.no_reference_report();
        csv << (nr.runs.empty() ? "" : fmt(nr.mean().auc)) << ",";
        const EvalReport li = rec.li_baseline_report();
        csv << (li.runs.empty() ? "" : fmt(li.mean().auc)) << ",";
        csv << fmt(train_acc) << "," << fmt(test_acc) << ","
            << fmt(train_acc - test_acc) << "\n";
    }

    // dataset x architecture AUC grid, one block per defense label
    std::ofstream txt(txt_file);
    if (!txt) throw DataError("cannot write " + txt_file.string());
    std::set<std::string> defenses, architectures, datasets;
    for (const auto& rec : records) {
        defenses.insert(rec.defense.label());
        architectures.insert(rec.architecture);
        datasets.insert(rec.transfer ? rec.transfer->shadow_dataset + "->" +
                                           rec.transfer->target_dataset
                                     : rec.config.dataset.name);
    }
    for (const auto& defense : defenses) {
        txt << "AUC (mean +- std), defense: " << defense << "\n";
        txt << "dataset";
        for (int i = 7; i < 24; ++i) txt << ' ';
        for (const auto& arch : architectures) {
            txt << arch;
            for (int i = static_cast<int>(arch.size()); i < 20; ++i) txt << ' ';
        }
        txt << "\n";
        for (const auto& ds : datasets) {
            bool any = false;
            std::ostringstream line;
            line << ds;
            for (int i = static_cast<int>(ds.size()); i < 24; ++i) line << ' ';
            for (const auto& arch : architectures) {
                std::string cell = "-";
                for (const auto& rec : records) {
                    const std::string rec_ds =
                        rec.transfer ? rec.transfer->shadow_dataset + "->" +
                                           rec.transfer->target_dataset
                                     : rec.config.dataset.name;
                    if (rec_ds == ds && rec.architecture == arch &&
                        rec.defense.label() == defense) {
                        const EvalReport fa = rec.face_auditor_report();
                        cell = fmt(fa.mean().auc, "%.3f") + " +- " +
                               fmt(fa.stddev().auc, "%.3f");
                        any = true;
                    }
                }
                line << cell;
                for (int i = static_cast<int>(cell.size()); i < 20; ++i) line << ' ';
            }
            if (any) txt << line.str() << "\n";
        }
        txt << "\n";
    }
}

namespace {

struct SvgBuilder {
    std::ostringstream body;
    int width, height;
    SvgBuilder(int w, int h) : width(w), height(h) {}

    void rect(double x, double y, double w, double h, const std::string& fill) {
        body << "<rect x=\"" << fmt(x, "%.2f") << "\" y=\"" << fmt(y, "%.2f")
             << "\" width=\"" << fmt(w, "%.2f") << "\" height=\"" << fmt(h, "%.2f")
             << "\" fill=\"" << fill << "\"/>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
        body << "<line x1=\"" << fmt(x1, "%.2f") << "\" y1=\"" << fmt(y1, "%.2f")
             << "\" x2=\"" << fmt(x2, "%.2f") << "\" y2=\"" << fmt(y2, "%.2f")
             << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 11) {
        body << "<text x=\"" << fmt(x, "%.2f") << "\" y=\"" << fmt(y, "%.2f")
             << "\" font-size=\"" << size << "\" font-family=\"sans-serif\">" << s
             << "</text>\n";
    }
    void circle(double x, double y, double r, const std::string& fill) {
        body << "<circle cx=\"" << fmt(x, "%.2f") << "\" cy=\"" << fmt(y, "%.2f")
             << "\" r=\"" << fmt(r, "%.2f") << "\" fill=\"" << fill << "\"/>\n";
    }
    std::string str() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
            << "\" height=\"" << height << "\">\n"
            << body.str() << "</svg>\n";
        return out.str();
    }
};

const char* kColors[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3"};

}  // namespace

void emit_plots(const std::vector<ResultRecord>& records,
                const std::filesystem::path& out_dir) {
    require_records(records);
    std::filesystem::create_directories(out_dir);

    // Grouped AUC bars: groups = record label, bars = architecture.
    {
        std::vector<std::pair<std::string, const ResultRecord*>> items;
        for (const auto& rec : records) {
            const std::string label =
                (rec.transfer ? rec.transfer->shadow_dataset + ">" +
                                    rec.transfer->target_dataset
                              : rec.config.dataset.name) +
                (rec.defense.kind == "none" ? "" : "/" + rec.defense.label());
            items.emplace_back(label, &rec);
        }
        std::set<std::string> arch_set;
        for (const auto& rec : records) arch_set.insert(rec.architecture);
        std::vector<std::string> archs(arch_set.begin(), arch_set.end());
        std::set<std::string> group_set;
        for (const auto& [label, rec] : items) group_set.insert(label);
        std::vector<std::string> groups(group_set.begin(), group_set.end());

        const int margin = 50, bar_w = 22, gap = 14;
        const int group_w = static_cast<int>(archs.size()) * bar_w + gap;
        const int width = margin * 2 + static_cast<int>(groups.size()) * group_w;
        const int height = 300;
        SvgBuilder svg(std::max(width, 360), height);
        const double plot_h = height - 2.0 * margin;
        svg.line(margin, height - margin, svg.width - margin + 10, height - margin, "#000");
        svg.line(margin, height - margin, margin, margin - 10, "#000");
        for (int tick = 0; tick <= 10; tick += 2) {
            const double y = height - margin - plot_h * tick / 10.0;
            svg.line(margin - 4, y, margin, y, "#000");
            svg.text(margin - 34, y + 4, fmt(tick / 10.0, "%.1f"), 10);
        }
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double gx = margin + static_cast<double>(g) * group_w;
            svg.text(gx, height - margin + 16, groups[g], 10);
            for (std::size_t a = 0; a < archs.size(); ++a) {
                for (const auto& [label, rec] : items) {
                    if (label != groups[g] || rec->architecture != archs[a]) continue;
                    const double auc = rec->face_auditor_report().mean().auc;
                    const double h = plot_h * auc;
                    svg.rect(gx + static_cast<double>(a) * bar_w, height - margin - h,
                             bar_w - 3, h, kColors[a % 5]);
                }
            }
        }
        for (std::size_t a = 0; a < archs.size(); ++a) {
            svg.rect(margin + static_cast<double>(a) * 110, 12, 10, 10, kColors[a % 5]);
            svg.text(margin + static_cast<double>(a) * 110 + 14, 21, archs[a], 10);
        }
        svg.text(margin, margin - 20, "auditing AUC", 12);
        std::ofstream out(out_dir / "auc_bars.svg");
        if (!out) throw DataError("cannot write auc_bars.svg");
        out << svg.str();
    }

    // AUC vs output-noise delta, one line per architecture.
    std::map<std::string, std::vector<std::pair<double, double>>> curves;
    for (const auto& rec : records)
        if (rec.defense.kind == "output_noise")
            curves[rec.architecture].emplace_back(rec.defense.delta, rec.median_auc());
    if (!curves.empty()) {
        const int margin = 50, width = 420, height = 300;
        SvgBuilder svg(width, height);
        const double plot_w = width - 2.0 * margin, plot_h = height - 2.0 * margin;
        double max_delta = 0.0;
        for (auto& [arch, pts] : curves) {
            std::sort(pts.begin(), pts.end());
            max_delta = std::max(max_delta, pts.back().first);
        }
        svg.line(margin, height - margin, width - margin, height - margin, "#000");
        svg.line(margin, height - margin, margin, margin, "#000");
        int color = 0;
        for (const auto& [arch, pts] : curves) {
            const std::string c = kColors[color % 5];
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double x = margin + plot_w * (pts[i].first / max_delta);
                const double y = height - margin - plot_h * pts[i].second;
                svg.circle(x, y, 3, c);
                if (i > 0) {
                    const double px = margin + plot_w * (pts[i - 1].first / max_delta);
                    const double py = height - margin - plot_h * pts[i - 1].second;
                    svg.line(px, py, x, y, c);
                }
            }
            svg.rect(margin + color * 110.0, 12, 10, 10, c);
            svg.text(margin + color * 110.0 + 14, 21, arch, 10);
            ++color;
        }
        svg.text(margin, margin - 20, "median AUC vs output noise stddev", 12);
        svg.text(width - margin - 40, height - margin + 24, fmt(max_delta, "%.2f"), 10);
        std::ofstream out(out_dir / "noise_curve.svg");
        if (!out) throw DataError("cannot write noise_curve.svg");
        out << svg.str();
    }
}

void emit_report(const std::vector<ResultRecord>& records, const std::string& format,
                 const std::filesystem::path& out_dir) {
    require_records(records);
    std::filesystem::create_directories(out_dir);
    if (format == "jsonl") {
        emit_jsonl(records, out_dir / "records.jsonl");
    } else if (format == "table") {
        emit_table(records, out_dir / "table.csv", out_dir / "table.txt");
    } else if (format == "plot") {
        emit_plots(records, out_dir);
    } else {
        throw ConfigError("unknown report format '" + format + "'");
    }
}

}  // namespace fsaudit
