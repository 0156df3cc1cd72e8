#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "bellrand/battery.hpp"
#include "bellrand/bits.hpp"
#include "bellrand/complexity.hpp"
#include "bellrand/error.hpp"
#include "bellrand/io.hpp"
#include "bellrand/nonlinear.hpp"
#include "bellrand/series.hpp"
#include "bellrand/stationarity.hpp"

namespace bellrand {

inline constexpr int report_schema = 1;

struct AnalyzeOptions {
    bool run_tests = true;
    BatteryOptions battery{};
    bool kc = true;
    bool h_min = true;
    bool hurst = true;
    bool stationarity = true;
    double stationarity_alpha = 0.05;
    bool nonlinear = false;
    bool force_nonlinear = false; // also OUT series, on their 0/1 values
    FnnOptions fnn{};
    std::optional<int> tau;       // default: AMI
    std::size_t nonlinear_samples = 10000; // leading samples used by the embedding
    std::optional<double> s_chsh;  // enables chsh_bound
};

struct SeriesReport {
    Provenance provenance;
    std::size_t length = 0;
    std::optional<double> kc;
    std::optional<double> h_min;
    std::optional<double> shannon;
    std::optional<double> hurst;
    std::optional<double> chsh_bound;
    std::optional<bool> zurek_ok;
    std::optional<int> adf_flag;
    std::optional<int> kpss_flag;
    std::optional<double> adf_stat;
    std::optional<double> kpss_stat;
    std::optional<BatteryReport> battery;
    std::optional<int> tau;
    std::optional<int> d_e;
    std::optional<double> lyapunov;
    std::optional<long long> horizon;
    std::optional<ThresholdSpectrum> spectrum;
    std::map<std::string, std::string> errors; // metric -> reason it is missing

    bool extracted() const noexcept { return provenance.extracted; }
    bool rejected() const noexcept { return battery && battery->rejected; }
    std::string name() const { return provenance.name(); }
};

namespace detail {

template <typename F>
void guard_metric(SeriesReport& r, const char* metric, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        r.errors[metric] = e.what();
    }
}

inline void run_nonlinear(SeriesReport& r, std::span<const double> reals, const AnalyzeOptions& opt) {
    const auto x = reals.first(std::min(reals.size(), opt.nonlinear_samples));
    guard_metric(r, "nonlinear", [&] {
        r.tau = opt.tau ? *opt.tau : ami_delay(x).tau;
        const auto emb = false_nearest_neighbors(x, *r.tau, opt.fnn);
        r.d_e = emb.d_e;
        if (!emb.d_e) return;
        const auto ly = largest_lyapunov(x, *r.tau, *emb.d_e);
        r.lyapunov = ly.lambda;
        r.horizon = ly.horizon;
    });
}

} // namespace detail

/// Runs every requested metric on one series; a failing metric leaves its
/// field empty and records the reason in `errors`.
inline SeriesReport analyze_series(const BitSeries& s, const AnalyzeOptions& opt = {}, std::span<const double> reals = {}) {
    if (s.bits.empty()) throw Error(Errc::empty_series, "cannot analyze an empty series");
    SeriesReport r;
    r.provenance = s.provenance;
    r.length = s.size();

    if (opt.run_tests) detail::guard_metric(r, "tests", [&] { r.battery = run_battery(s.bits, opt.battery); });
    if (opt.kc) detail::guard_metric(r, "kc", [&] { r.kc = kc(s.bits).kc; });
    if (opt.h_min) {
        const auto e = min_entropy(s.bits);
        r.h_min = e.h_min;
        r.shannon = e.shannon;
    }
    if (r.kc && r.h_min) r.zurek_ok = *r.kc >= *r.h_min;
    if (opt.hurst) detail::guard_metric(r, "hurst", [&] { r.hurst = hurst_exponent(s.bits).h; });
    if (opt.s_chsh) detail::guard_metric(r, "chsh_bound", [&] { r.chsh_bound = chsh_min_entropy_bound(*opt.s_chsh); });
    if (opt.stationarity) {
        detail::guard_metric(r, "adf", [&] {
            std::vector<double> y(s.size());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.bits[i] ? 1.0 : -1.0;
            const auto a = adf_test(y, opt.stationarity_alpha);
            r.adf_flag = a.flag;
            r.adf_stat = a.statistic;
        });
        detail::guard_metric(r, "kpss", [&] {
            std::vector<double> y(s.size());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.bits[i] ? 1.0 : -1.0;
            const auto k = kpss_test(y, opt.stationarity_alpha, true);
            r.kpss_flag = k.flag;
            r.kpss_stat = k.statistic;
        });
    }
    if (opt.nonlinear) {
        if (s.provenance.kind == SeriesKind::TD && !reals.empty()) {
            detail::run_nonlinear(r, reals, opt);
        } else if (opt.force_nonlinear) {
            std::vector<double> y(s.size());
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.bits[i] ? 1.0 : 0.0;
            detail::run_nonlinear(r, y, opt);
        } else {
            r.errors["nonlinear"] = "needs the real-valued time differences of a TD series";
        }
    }
    return r;
}

// ---- JSON ----------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ThresholdSpectrum& sp) {
    auto grid = nlohmann::json::array();
    for (const auto& p : sp.grid)
        grid.push_back({{"quantile", p.quantile}, {"threshold_ps", p.threshold_ps}, {"kc", p.kc}, {"h_min", p.h_min}});
    j = {{"grid", grid},
         {"kc_argmax", sp.kc_argmax},
         {"h_min_argmax", sp.h_min_argmax},
         {"theta_star", sp.theta_star},
         {"median", sp.median},
         {"median_position", sp.median_position},
         {"threshold", sp.threshold},
         {"maxima_coincide", sp.maxima_coincide}};
}

inline void from_json(const nlohmann::json& j, ThresholdSpectrum& sp) {
    sp.grid.clear();
    for (const auto& p : j.at("grid"))
        sp.grid.push_back({p.at("quantile").get<double>(), p.at("threshold_ps").get<std::int64_t>(), p.at("kc").get<double>(),
                           p.at("h_min").get<double>()});
    sp.kc_argmax = j.at("kc_argmax").get<std::size_t>();
    sp.h_min_argmax = j.at("h_min_argmax").get<std::size_t>();
    sp.theta_star = j.at("theta_star").get<std::int64_t>();
    sp.median = j.at("median").get<std::int64_t>();
    sp.median_position = j.at("median_position").get<double>();
    sp.threshold = j.at("threshold").get<std::int64_t>();
    sp.maxima_coincide = j.at("maxima_coincide").get<bool>();
}

namespace detail {

template <typename T>
nlohmann::json opt_json(const std::optional<T>& v) {
    if (!v) return nullptr;
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(*v)) return nullptr;
    }
    return *v;
}

template <typename T>
std::optional<T> json_opt(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<T>();
}

} // namespace detail

inline void to_json(nlohmann::json& j, const SeriesReport& r) {
    using detail::opt_json;
    j = {{"series", r.name()},
         {"provenance", r.provenance},
         {"length", r.length},
         {"extracted", r.extracted()},
         {"kc", opt_json(r.kc)},
         {"h_min", opt_json(r.h_min)},
         {"shannon", opt_json(r.shannon)},
         {"hurst", opt_json(r.hurst)},
         {"chsh_bound", opt_json(r.chsh_bound)},
         {"zurek_ok", opt_json(r.zurek_ok)},
         {"adf", opt_json(r.adf_flag)},
         {"kpss", opt_json(r.kpss_flag)},
         {"adf_stat", opt_json(r.adf_stat)},
         {"kpss_stat", opt_json(r.kpss_stat)},
         {"tau", opt_json(r.tau)},
         {"d_e", opt_json(r.d_e)},
         {"lyapunov", opt_json(r.lyapunov)},
         {"horizon", opt_json(r.horizon)},
         {"rejected", r.rejected()},
         {"errors", r.errors}};
    auto tests = nlohmann::json::array();
    if (r.battery) {
        for (const auto& t : r.battery->results) {
            auto p = nlohmann::json::array();
            for (double v : t.p_values) p.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
            nlohmann::json tj = {{"test", t.test_name}, {"p_values", p}, {"applicable", t.applicable}, {"pass", t.pass}};
            if (!t.applicable) tj["reason"] = t.detail;
            tests.push_back(std::move(tj));
        }
    }
    j["tests"] = std::move(tests);
    if (r.spectrum) j["spectrum"] = *r.spectrum;
}

inline void from_json(const nlohmann::json& j, SeriesReport& r) {
    using detail::json_opt;
    r.provenance = j.at("provenance").get<Provenance>();
    r.length = j.at("length").get<std::size_t>();
    r.kc = json_opt<double>(j, "kc");
    r.h_min = json_opt<double>(j, "h_min");
    r.shannon = json_opt<double>(j, "shannon");
    r.hurst = json_opt<double>(j, "hurst");
    r.chsh_bound = json_opt<double>(j, "chsh_bound");
    r.zurek_ok = json_opt<bool>(j, "zurek_ok");
    r.adf_flag = json_opt<int>(j, "adf");
    r.kpss_flag = json_opt<int>(j, "kpss");
    r.adf_stat = json_opt<double>(j, "adf_stat");
    r.kpss_stat = json_opt<double>(j, "kpss_stat");
    r.tau = json_opt<int>(j, "tau");
    r.d_e = json_opt<int>(j, "d_e");
    r.lyapunov = json_opt<double>(j, "lyapunov");
    r.horizon = json_opt<long long>(j, "horizon");
    r.errors = j.value("errors", std::map<std::string, std::string>{});
    r.battery.reset();
    if (const auto& tests = j.at("tests"); !tests.empty() || j.at("rejected").get<bool>()) {
        BatteryReport b;
        b.series_length = r.length;
        for (const auto& t : tests) {
            TestResult tr;
            tr.test_name = t.at("test").get<std::string>();
            for (const auto& p : t.at("p_values")) tr.p_values.push_back(p.is_null() ? std::numeric_limits<double>::quiet_NaN() : p.get<double>());
            tr.applicable = t.at("applicable").get<bool>();
            tr.pass = t.at("pass").get<bool>();
            tr.detail = t.value("reason", std::string{});
            b.results.push_back(std::move(tr));
        }
        b.rejected = j.at("rejected").get<bool>();
        r.battery = std::move(b);
    }
    if (j.contains("spectrum")) r.spectrum = j["spectrum"].get<ThresholdSpectrum>();
}

// ---- aggregation ---------------------------------------------------------

struct AggregateRow {
    SeriesClass cls = SeriesClass::AL;
    SeriesKind kind = SeriesKind::OUT;
    bool extracted = false;
    std::size_t n = 0;
    double mean_kc = std::numeric_limits<double>::quiet_NaN();
    double mean_h_min = std::numeric_limits<double>::quiet_NaN();
    std::size_t rejected = 0;
    double rejection_rate = 0.0;
    std::size_t kpss1 = 0;

    std::string kpss1_count() const { return std::to_string(kpss1) + "/" + std::to_string(n); }
};

struct AggregateTable {
    std::vector<AggregateRow> rows; // ordered by (class, kind, extracted)

    const AggregateRow* find(SeriesClass c, SeriesKind k, bool extracted = false) const {
        for (const auto& r : rows)
            if (r.cls == c && r.kind == k && r.extracted == extracted) return &r;
        return nullptr;
    }
};

namespace detail {

// Sorted before summation so the mean does not depend on input order.
inline double order_free_mean(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace detail

/// Per-(class, kind) means, rejection rates and KPSS=1 counts; extracted
/// series get rows of their own. Series lacking a metric are left out of
/// that metric's mean but still count in N.
inline AggregateTable aggregate(std::span<const SeriesReport> reports) {
    if (reports.empty()) throw Error(Errc::empty_input, "no reports to aggregate");
    struct Cell {
        std::vector<double> kc, h_min;
        std::size_t n = 0, rejected = 0, kpss1 = 0;
    };
    std::map<std::tuple<SeriesClass, SeriesKind, bool>, Cell> cells;
    for (const auto& r : reports) {
        auto& c = cells[{r.provenance.cls, r.provenance.kind, r.provenance.extracted}];
        ++c.n;
        if (r.kc) c.kc.push_back(*r.kc);
        if (r.h_min) c.h_min.push_back(*r.h_min);
        if (r.rejected()) ++c.rejected;
        if (r.kpss_flag && *r.kpss_flag == 1) ++c.kpss1;
    }
    AggregateTable t;
    for (auto& [key, c] : cells) {
        AggregateRow row;
        std::tie(row.cls, row.kind, row.extracted) = key;
        row.n = c.n;
        row.mean_kc = detail::order_free_mean(std::move(c.kc));
        row.mean_h_min = detail::order_free_mean(std::move(c.h_min));
        row.rejected = c.rejected;
        row.rejection_rate = static_cast<double>(c.rejected) / static_cast<double>(c.n);
        row.kpss1 = c.kpss1;
        t.rows.push_back(row);
    }
    return t;
}

namespace detail {

inline std::string csv_number(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace detail

/// Columns: class,kind,extracted,n,mean_kc,mean_h_min,rejection_rate,kpss1
inline std::string table_csv(const AggregateTable& t) {
    std::string out = "class,kind,extracted,n,mean_kc,mean_h_min,rejection_rate,kpss1\n";
    for (const auto& r : t.rows) {
        out += std::string(to_string(r.cls)) + "," + std::string(to_string(r.kind)) + "," + (r.extracted ? "1" : "0") + "," +
               std::to_string(r.n) + ",";
        out += detail::csv_number(r.mean_kc) + "," + detail::csv_number(r.mean_h_min) + ",";
        out += detail::csv_number(r.rejection_rate) + "," + r.kpss1_count() + "\n";
    }
    return out;
}

// ---- figures -------------------------------------------------------------

struct NamedSpectrum {
    std::string series;
    ThresholdSpectrum spectrum;
};

inline std::vector<NamedSpectrum> collect_spectra(std::span<const SeriesReport> reports) {
    std::vector<NamedSpectrum> out;
    for (const auto& r : reports)
        if (r.spectrum) out.push_back({r.provenance.source.empty() ? r.name() : r.provenance.source + ":" + r.name(), *r.spectrum});
    return out;
}

/// Columns: series,quantile,threshold_ps,kc,h_min (one row per grid point).
inline std::string spectrum_csv(std::span<const NamedSpectrum> spectra) {
    std::string out = "series,quantile,threshold_ps,kc,h_min\n";
    for (const auto& s : spectra)
        for (const auto& p : s.spectrum.grid)
            out += s.series + "," + detail::csv_number(p.quantile) + "," + std::to_string(p.threshold_ps) + "," +
                   detail::csv_number(p.kc) + "," + detail::csv_number(p.h_min) + "\n";
    return out;
}

/// Columns: series,class,kind,station,extracted,h_min,kc,rejected,zurek_ok.
/// zurek_ok = 0 flags a point below the kc >= h_min bound.
inline std::string scatter_csv(std::span<const SeriesReport> reports) {
    std::string out = "series,class,kind,station,extracted,h_min,kc,rejected,zurek_ok\n";
    for (const auto& r : reports) {
        if (!r.kc || !r.h_min) continue;
        const auto& p = r.provenance;
        out += (p.source.empty() ? r.name() : p.source + ":" + r.name()) + "," + std::string(to_string(p.cls)) + "," +
               std::string(to_string(p.kind)) + "," + std::string(to_string(p.station)) + "," + (p.extracted ? "1" : "0") + "," +
               detail::csv_number(*r.h_min) + "," + detail::csv_number(*r.kc) + "," + (r.rejected() ? "1" : "0") + "," +
               (*r.kc >= *r.h_min ? "1" : "0") + "\n";
    }
    return out;
}

struct FigureFiles {
    std::filesystem::path spectrum;
    std::filesystem::path scatter;
};

inline FigureFiles emit_figures(const std::filesystem::path& dir, std::span<const SeriesReport> reports,
                                std::span<const NamedSpectrum> spectra) {
    FigureFiles f{dir / "threshold_spectrum.csv", dir / "kc_vs_hmin.csv"};
    write_file(f.spectrum, spectrum_csv(spectra));
    write_file(f.scatter, scatter_csv(reports));
    return f;
}

// ---- raw vs extracted ----------------------------------------------------

/// Discriminators between raw and extracted series; descriptive only.
struct ExtractionComparison {
    std::size_t raw_n = 0;
    std::size_t extracted_n = 0;
    double raw_mean_kc = std::numeric_limits<double>::quiet_NaN();
    double extracted_mean_kc = std::numeric_limits<double>::quiet_NaN();
    double raw_mean_h_min = std::numeric_limits<double>::quiet_NaN();
    double extracted_mean_h_min = std::numeric_limits<double>::quiet_NaN();
    double raw_hurst_sd = std::numeric_limits<double>::quiet_NaN();
    double extracted_hurst_sd = std::numeric_limits<double>::quiet_NaN();
};

inline ExtractionComparison compare_extraction(std::span<const SeriesReport> reports) {
    std::vector<double> kc[2], hm[2], hu[2];
    ExtractionComparison c;
    for (const auto& r : reports) {
        const int e = r.extracted() ? 1 : 0;
        (e ? c.extracted_n : c.raw_n)++;
        if (r.kc) kc[e].push_back(*r.kc);
        if (r.h_min) hm[e].push_back(*r.h_min);
        if (r.hurst) hu[e].push_back(*r.hurst);
    }
    auto sd = [](std::vector<double> v) {
        if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        const double m = detail::order_free_mean(v);
        const auto n = static_cast<double>(v.size());
        for (double& x : v) x = (x - m) * (x - m);
        return std::sqrt(detail::order_free_mean(std::move(v)) * n / (n - 1.0));
    };
    c.raw_mean_kc = detail::order_free_mean(kc[0]);
    c.extracted_mean_kc = detail::order_free_mean(kc[1]);
    c.raw_mean_h_min = detail::order_free_mean(hm[0]);
    c.extracted_mean_h_min = detail::order_free_mean(hm[1]);
    c.raw_hurst_sd = sd(hu[0]);
    c.extracted_hurst_sd = sd(hu[1]);
    return c;
}

inline void to_json(nlohmann::json& j, const ExtractionComparison& c) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    j = {{"raw_n", c.raw_n},
         {"extracted_n", c.extracted_n},
         {"raw_mean_kc", num(c.raw_mean_kc)},
         {"extracted_mean_kc", num(c.extracted_mean_kc)},
         {"raw_mean_h_min", num(c.raw_mean_h_min)},
         {"extracted_mean_h_min", num(c.extracted_mean_h_min)},
         {"raw_hurst_sd", num(c.raw_hurst_sd)},
         {"extracted_hurst_sd", num(c.extracted_hurst_sd)}};
}

inline void to_json(nlohmann::json& j, const AggregateTable& t) {
    j = nlohmann::json::array();
    for (const auto& r : t.rows) {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        j.push_back({{"class", std::string(to_string(r.cls))},
                     {"kind", std::string(to_string(r.kind))},
                     {"extracted", r.extracted},
                     {"n", r.n},
                     {"mean_kc", num(r.mean_kc)},
                     {"mean_h_min", num(r.mean_h_min)},
                     {"rejection_rate", r.rejection_rate},
                     {"kpss1", r.kpss1_count()}});
    }
}

/// Whole-run report document: {"schema": 1, "series": [...]} plus the
/// extraction comparison when both raw and extracted series are present.
inline nlohmann::json report_document(std::span<const SeriesReport> reports) {
    nlohmann::json doc = {{"schema", report_schema}, {"series", nlohmann::json::array()}};
    for (const auto& r : reports) doc["series"].push_back(r);
    const auto c = compare_extraction(reports);
    if (c.raw_n > 0 && c.extracted_n > 0) doc["comparison"] = c;
    return doc;
}

inline std::vector<SeriesReport> parse_report_document(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("schema", 0) != report_schema) throw Error(Errc::malformed_record, "not a schema-1 report");
    std::vector<SeriesReport> out;
    try {
        for (const auto& s : doc.at("series")) out.push_back(s.get<SeriesReport>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed_record, e.what());
    }
    return out;
}

} // namespace bellrand
