#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixnash::svg {

/// Minimal self-contained line-plot writer. The output is a pure function of
/// the supplied series, so plots regenerate byte-identically from their CSVs.
class LinePlot {
  public:
    LinePlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_series(std::string name, std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.empty())
            throw std::invalid_argument("LinePlot: series must be nonempty and aligned");
        series_.push_back({std::move(name), std::move(xs), std::move(ys)});
    }

    void set_log_x(bool on) { log_x_ = on; }

    std::string render() const {
        if (series_.empty()) throw std::invalid_argument("LinePlot: nothing to draw");
        double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
        double ymin = xmin, ymax = -xmin;
        for (const auto& s : series_)
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                const double x = log_x_ ? std::log10(std::max(s.xs[i], 1e-300)) : s.xs[i];
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, s.ys[i]);
                ymax = std::max(ymax, s.ys[i]);
            }
        if (xmax == xmin) {
            xmin -= 0.5;
            xmax += 0.5;
        }
        if (ymax == ymin) {
            ymin -= 0.5;
            ymax += 0.5;
        }
        const double pad_y = 0.05 * (ymax - ymin);
        ymin -= pad_y;
        ymax += pad_y;

        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) + "\" height=\"" + fmt(kH) +
               "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += text(kW / 2, 24, title_, 16, "middle");
        out += text(kW / 2, kH - 8, xlabel_, 12, "middle");
        out += "<g transform=\"translate(16," + fmt(kH / 2) + ") rotate(-90)\">" +
               text(0, 0, ylabel_, 12, "middle") + "</g>\n";
        out += "<rect x=\"" + fmt(kL) + "\" y=\"" + fmt(kT) + "\" width=\"" + fmt(kW - kL - kR) +
               "\" height=\"" + fmt(kH - kT - kB) + "\" fill=\"none\" stroke=\"black\"/>\n";

        for (int tick = 0; tick <= 4; ++tick) {
            const double fx = xmin + (xmax - xmin) * tick / 4.0;
            const double fy = ymin + (ymax - ymin) * tick / 4.0;
            const double px = map_x(fx, xmin, xmax);
            const double py = map_y(fy, ymin, ymax);
            out += line(px, kH - kB, px, kH - kB + 4);
            out += text(px, kH - kB + 16, tick_label(fx, log_x_), 10, "middle");
            out += line(kL - 4, py, kL, py);
            out += text(kL - 6, py + 3, tick_label(fy, false), 10, "end");
        }

        for (std::size_t s = 0; s < series_.size(); ++s) {
            std::string pts;
            for (std::size_t i = 0; i < series_[s].xs.size(); ++i) {
                const double x = log_x_ ? std::log10(std::max(series_[s].xs[i], 1e-300)) : series_[s].xs[i];
                pts += fmt(map_x(x, xmin, xmax)) + "," + fmt(map_y(series_[s].ys[i], ymin, ymax)) + " ";
            }
            out += "<polyline fill=\"none\" stroke=\"" + color(s) + "\" stroke-width=\"1.5\" points=\"" +
                   pts + "\"/>\n";
            const double ly = kT + 16.0 + 16.0 * static_cast<double>(s);
            out += line(kW - kR - 150, ly, kW - kR - 130, ly, color(s));
            out += text(kW - kR - 125, ly + 4, series_[s].name, 11, "start");
        }
        out += "</svg>\n";
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("LinePlot: cannot open " + path);
        out << render();
    }

  private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
    };

    static constexpr double kW = 640, kH = 420, kL = 64, kR = 24, kT = 40, kB = 48;

    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return buf;
    }

    static std::string tick_label(double v, bool as_pow10) {
        char buf[32];
        if (as_pow10)
            std::snprintf(buf, sizeof(buf), "1e%.1f", v);
        else
            std::snprintf(buf, sizeof(buf), "%.3g", v);
        return buf;
    }

    static double map_x(double x, double xmin, double xmax) {
        return kL + (x - xmin) / (xmax - xmin) * (kW - kL - kR);
    }
    static double map_y(double y, double ymin, double ymax) {
        return kH - kB - (y - ymin) / (ymax - ymin) * (kH - kT - kB);
    }

    static std::string color(std::size_t s) {
        static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
        return palette[s % 8];
    }

    static std::string text(double x, double y, const std::string& s, int size, const char* anchor) {
        return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\" font-size=\"" +
               std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
    }

    static std::string line(double x1, double y1, double x2, double y2, const std::string& stroke = "black") {
        return "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" + fmt(y2) +
               "\" stroke=\"" + stroke + "\" stroke-width=\"1.5\"/>\n";
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&')
                out += "&amp;";
            else if (c == '<')
                out += "&lt;";
            else if (c == '>')
                out += "&gt;";
            else
                out += c;
        }
        return out;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
    bool log_x_ = false;
};

}  // namespace mixnash::svg
