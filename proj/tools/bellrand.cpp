// bellrand command-line front end: simulate | derive | analyze | extract | report

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bellrand.hpp"

namespace fs = std::filesystem;
using namespace bellrand;

namespace {

constexpr int exit_series_error = 2;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end) throw Error(Errc::invalid_config, std::string("bad ") + what + ": '" + s + "'");
    return v;
}

std::string file_stem_for(const Provenance& p) {
    std::string st(to_string(p.station));
    std::string name = std::string(to_string(p.cls)) + "_" + std::string(to_string(p.kind)) + "_" + st;
    if (p.extracted) name += "_ext";
    return name;
}

std::vector<fs::path> series_files(const fs::path& in) {
    if (fs::is_regular_file(in)) return {in};
    if (!fs::is_directory(in)) throw Error(Errc::io, "no such file or directory: " + in.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".bits") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<fs::path> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    SynthConfig cfg;
    std::string efficiency = "0.21,0.21,0.21,0.21";
    std::string out;
    std::string format = "binary";
};

int run_simulate(SimulateArgs& a) {
    const auto eff = split(a.efficiency, ',');
    if (eff.size() != 4) throw Error(Errc::invalid_config, "--efficiency needs four values A0,A1,B0,B1");
    for (std::size_t i = 0; i < 4; ++i) a.cfg.efficiency[i] = std::stod(eff[i]);
    const auto stream = simulate_run(a.cfg);
    write_file(a.out, write_timetag(stream, a.format == "csv" ? TimetagFormat::csv : TimetagFormat::binary));
    std::cerr << "wrote " << stream.size() << " events to " << a.out << "\n";
    return 0;
}

// ---- derive ---------------------------------------------------------------

struct DeriveArgs {
    std::string in;
    double window_ns = 10.0;
    std::int64_t delay_ps = 0;
    std::string scan;
    int grid = default_threshold_grid;
    std::string out_dir = "series";
};

int run_derive(const DeriveArgs& a) {
    const std::string bytes = read_file(a.in);
    const EventStream stream = parse_timetag(std::string_view(bytes));
    DeriveOptions opt;
    opt.window_ps = static_cast<std::int64_t>(std::llround(a.window_ns * 1000.0));
    opt.delay_ps = a.delay_ps;
    opt.grid_quantiles = a.grid;
    if (!a.scan.empty()) {
        const auto parts = split(a.scan, ':');
        if (parts.size() != 3) throw Error(Errc::invalid_config, "--scan-delay expects lo:hi:step");
        opt.scan = DelayScan{parse_number<std::int64_t>(parts[0], "scan lo"), parse_number<std::int64_t>(parts[1], "scan hi"),
                             parse_number<std::int64_t>(parts[2], "scan step")};
    }
    const DerivedSet set = derive_all(stream, opt);

    nlohmann::json summary = {{"schema", series_file_schema},
                              {"input", a.in},
                              {"run", stream.meta},
                              {"window_ps", opt.window_ps},
                              {"coincidences", set.coincidences.size()},
                              {"delay_ps", set.coincidences.delay_ps},
                              {"series", nlohmann::json::array()}};
    if (set.delay_scan) summary["low_contrast"] = set.delay_scan->low_contrast;
    int rc = 0;
    for (const auto& d : set.series) {
        const std::string stem = file_stem_for(d.series.provenance);
        if (!d.ok()) {
            std::cerr << stem << ": " << d.error << "\n";
            summary["series"].push_back({{"series", stem}, {"error", d.error}});
            rc = exit_series_error;
            continue;
        }
        SeriesFile f;
        f.series = d.series;
        f.run = stream.meta;
        if (d.td) f.td = d.td->diffs;
        if (d.spectrum) f.extra["spectrum"] = *d.spectrum;
        const fs::path p = fs::path(a.out_dir) / (stem + ".bits");
        write_series_file(p, f);
        summary["series"].push_back({{"series", stem}, {"file", p.filename().string()}, {"length", d.series.size()}});
    }
    write_file(fs::path(a.out_dir) / "derive.json", summary.dump(2) + "\n");
    std::cerr << "derived " << set.series.size() << " series (" << set.coincidences.size() << " coincidences) into " << a.out_dir
              << "\n";
    return rc;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
    std::string in;
    std::string out = "report.json";
    std::string tests = "nist";
    std::string metrics = "all";
    bool nonlinear = false;
    bool force_nonlinear = false;
    int dmax = 12;
    std::string tau = "auto";
    double alpha = 0.01;
    std::string correction = "sidak";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

AnalyzeOptions analyze_options(const AnalyzeArgs& a) {
    AnalyzeOptions o;
    if (a.tests != "nist" && a.tests != "none") throw Error(Errc::invalid_config, "--tests must be nist or none");
    o.run_tests = a.tests == "nist";
    o.battery.alpha = a.alpha;
    o.battery.correction = a.correction == "none" ? Correction::none : Correction::sidak;
    if (a.metrics != "all") {
        o.kc = o.h_min = o.hurst = o.stationarity = false;
        for (const auto& m : split(a.metrics, ',')) {
            if (m == "kc") o.kc = true;
            else if (m == "hmin" || m == "h_min") o.h_min = true;
            else if (m == "hurst") o.hurst = true;
            else if (m == "stationarity" || m == "adf" || m == "kpss") o.stationarity = true;
            else throw Error(Errc::invalid_config, "unknown metric '" + m + "'");
        }
    }
    o.nonlinear = a.nonlinear || a.force_nonlinear;
    o.force_nonlinear = a.force_nonlinear;
    o.fnn.d_max = a.dmax;
    if (a.tau != "auto") o.tau = parse_number<int>(a.tau, "tau");
    return o;
}

int run_analyze(const AnalyzeArgs& a) {
    const AnalyzeOptions base = analyze_options(a);
    const auto files = series_files(a.in);
    std::vector<std::optional<SeriesReport>> reports(files.size());
    std::vector<std::string> failures(files.size());

    parallel_for(files.size(), a.jobs, [&](std::size_t i) {
        try {
            const SeriesFile f = read_series_file(files[i]);
            AnalyzeOptions opt = base;
            if (f.run && f.run->nominal_s_chsh > 0.0) opt.s_chsh = f.run->nominal_s_chsh;
            std::vector<double> reals;
            if (f.td) reals.assign(f.td->begin(), f.td->end());
            SeriesReport r = analyze_series(f.series, opt, reals);
            if (f.extra.contains("spectrum")) r.spectrum = f.extra["spectrum"].get<ThresholdSpectrum>();
            reports[i] = std::move(r);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    std::vector<SeriesReport> done;
    int rc = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (reports[i]) {
            done.push_back(std::move(*reports[i]));
        } else {
            std::cerr << files[i].string() << ": " << failures[i] << "\n";
            rc = exit_series_error;
        }
    }
    nlohmann::json doc = report_document(done);
    nlohmann::json errs = nlohmann::json::array();
    for (std::size_t i = 0; i < files.size(); ++i)
        if (!failures[i].empty()) errs.push_back({{"file", files[i].filename().string()}, {"error", failures[i]}});
    if (!errs.empty()) doc["failures"] = errs;
    write_file(a.out, doc.dump(2) + "\n");
    std::size_t rejected = 0;
    for (const auto& r : done) rejected += r.rejected() ? 1 : 0;
    std::cerr << "analyzed " << done.size() << " series, " << rejected << " rejected; report in " << a.out << "\n";
    return rc;
}

// ---- extract --------------------------------------------------------------

struct ExtractArgs {
    std::string in;
    std::string out;
    std::size_t m = default_toeplitz_dim;
    std::size_t n = default_toeplitz_dim;
    bool freeze = false;
};

int run_extract(const ExtractArgs& a) {
    const SeriesFile raw = read_series_file(a.in);
    SeriesFile f;
    f.run = raw.run;
    try {
        f.series = extract_series(raw.series, ExtractOptions{a.m, a.n, a.freeze});
    } catch (const Error& err) {
        std::cerr << a.in << ": " << err.what() << "\n";
        return exit_series_error;
    }
    write_series_file(a.out, f);
    std::cerr << "extracted " << f.series.size() << " bits from " << raw.series.size() << " raw bits into " << a.out << "\n";
    return 0;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> patterns;
    std::string table = "table.csv";
    std::string figures;
    std::string json;
};

int run_report(const ReportArgs& a) {
    std::vector<SeriesReport> reports;
    std::size_t files = 0;
    for (const auto& pat : a.patterns) {
        for (const auto& p : expand_glob(pat)) {
            ++files;
            auto rs = parse_report_document(nlohmann::json::parse(read_file(p)));
            reports.insert(reports.end(), std::make_move_iterator(rs.begin()), std::make_move_iterator(rs.end()));
        }
    }
    if (files == 0) throw Error(Errc::empty_input, "no report files matched");
    const AggregateTable table = aggregate(reports);
    const std::string csv = table_csv(table);
    write_file(a.table, csv);
    std::cout << csv;
    if (!a.figures.empty()) {
        const auto spectra = collect_spectra(reports);
        emit_figures(a.figures, reports, spectra);
    }
    if (!a.json.empty()) {
        nlohmann::json doc = {{"schema", report_schema}, {"table", table}};
        const auto c = compare_extraction(reports);
        if (c.raw_n > 0 && c.extracted_n > 0) doc["comparison"] = c;
        write_file(a.json, doc.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomness analysis of two-station photon-detection data"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a synthetic two-station detection run");
    s->add_option("--visibility", sim.cfg.visibility, "two-photon visibility V")->capture_default_str();
    s->add_option("--pair-rate", sim.cfg.pair_rate, "pair generation rate (1/s)")->capture_default_str();
    s->add_option("--singles-rate", sim.cfg.background_singles_rate, "background singles per station (1/s)")->capture_default_str();
    s->add_option("--efficiency", sim.efficiency, "detector efficiencies A0,A1,B0,B1")->capture_default_str();
    s->add_option("--jitter-ps", sim.cfg.jitter_sigma_ps, "timing jitter sigma (ps)")->capture_default_str();
    s->add_option("--duration-s", sim.cfg.duration_s, "run duration (s)")->capture_default_str();
    s->add_option("--seed", sim.cfg.rng_seed, "RNG seed")->capture_default_str();
    s->add_option("--setting-a", sim.cfg.setting_a, "station A analyzer setting index (0: 0 deg, 1: 45 deg)")->capture_default_str();
    s->add_option("--setting-b", sim.cfg.setting_b, "station B analyzer setting index (0: 22.5 deg, 1: 67.5 deg)")->capture_default_str();
    s->add_option("--label", sim.cfg.label, "run label")->capture_default_str();
    s->add_option("--out", sim.out, "output file")->required();
    s->add_option("--format", sim.format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();

    DeriveArgs der;
    auto* d = app.add_subcommand("derive", "derive OUT and TD binary series from a detection file");
    d->add_option("--in", der.in, "time-tag file (csv or binary)")->required();
    d->add_option("--window-ns", der.window_ns, "coincidence window (ns)")->capture_default_str();
    auto* dly = d->add_option("--delay-ps", der.delay_ps, "station B delay (ps)")->capture_default_str();
    d->add_option("--scan-delay", der.scan, "scan delays lo:hi:step (ps)")->excludes(dly);
    d->add_option("--grid", der.grid, "threshold quantile grid size")->capture_default_str();
    d->add_option("--out-dir", der.out_dir, "output directory")->capture_default_str();

    AnalyzeArgs an;
    auto* a = app.add_subcommand("analyze", "run the test battery and metrics on series files");
    a->add_option("--in", an.in, "series file or directory of .bits files")->required();
    a->add_option("--out", an.out, "JSON report")->capture_default_str();
    a->add_option("--tests", an.tests, "nist or none")->capture_default_str();
    a->add_option("--metrics", an.metrics, "all or a list of kc,hmin,hurst,stationarity")->capture_default_str();
    a->add_flag("--nonlinear", an.nonlinear, "embedding dimension and Lyapunov analysis of TD series");
    a->add_flag("--force-nonlinear", an.force_nonlinear, "nonlinear analysis on OUT series too");
    a->add_option("--dmax", an.dmax, "largest embedding dimension")->capture_default_str();
    a->add_option("--tau", an.tau, "embedding delay: auto or an integer")->capture_default_str();
    a->add_option("--alpha", an.alpha, "battery significance level")->capture_default_str();
    a->add_option("--correction", an.correction, "sidak or none")->check(CLI::IsMember({"sidak", "none"}))->capture_default_str();
    a->add_option("--jobs", an.jobs, "worker threads")->capture_default_str();

    ExtractArgs ex;
    auto* e = app.add_subcommand("extract", "Toeplitz-hash a raw series");
    e->add_option("--in", ex.in, "raw series file")->required();
    e->add_option("--out", ex.out, "extracted series file")->required();
    e->add_option("--m", ex.m, "output bits per block")->capture_default_str();
    e->add_option("--n", ex.n, "seed bits per block")->capture_default_str();
    e->add_flag("--freeze-matrix", ex.freeze, "reuse the first block's matrix");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "aggregate analyze reports into a summary table");
    r->add_option("--aggregate", rep.patterns, "report file glob (repeatable)")->required();
    r->add_option("--table", rep.table, "table CSV")->capture_default_str();
    r->add_option("--figures", rep.figures, "directory for plot-data CSVs");
    r->add_option("--json", rep.json, "table and comparison as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (s->parsed()) return run_simulate(sim);
        if (d->parsed()) return run_derive(der);
        if (a->parsed()) return run_analyze(an);
        if (e->parsed()) return run_extract(ex);
        if (r->parsed()) return run_report(rep);
    } catch (const std::exception& err) {
        std::cerr << "bellrand: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
