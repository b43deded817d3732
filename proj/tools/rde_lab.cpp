// rde_lab: command-line front end for the rdelab library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <rdelab.hpp>

using namespace rdelab;

namespace {

enum Exit : int {
    exit_ok = 0,
    exit_failed = 1,
    exit_usage = 2,
    exit_schema = 3,
    exit_unknown_name = 4,
    exit_guard = 5,
    exit_precondition = 6,
    exit_internal = 7,
};

constexpr const char* exit_help =
    "Exit status:\n"
    "  0  success\n"
    "  1  validation or check failure\n"
    "  2  usage error\n"
    "  3  schema violation in the instance file\n"
    "  4  unknown cover, measure or instance name\n"
    "  5  solver guard exceeded (raise --enum-max / --cover-universe-max / --cover-elems-max)\n"
    "  6  precondition or numeric failure (e.g. non-invariant measure, unreadable file)\n"
    "  7  internal error\n";

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::schema: return exit_schema;
        case ErrorKind::unknown_name: return exit_unknown_name;
        case ErrorKind::guard: return exit_guard;
        case ErrorKind::precondition:
        case ErrorKind::numeric: return exit_precondition;
        case ErrorKind::internal: return exit_internal;
    }
    return exit_internal;
}

struct Common {
    std::string file;
    std::string json_path;
    std::size_t enum_max = EntropyLimits{}.enum_max;
    std::size_t universe_max = SetCoverLimits{}.universe_max;
    std::size_t elems_max = SetCoverLimits{}.elements_max;

    EntropyLimits limits() const {
        EntropyLimits l;
        l.enum_max = enum_max;
        l.cover.universe_max = universe_max;
        l.cover.elements_max = elems_max;
        return l;
    }
};

void add_common(CLI::App* cmd, Common& c, bool solver = true) {
    if (solver)
        cmd->add_option("file", c.file, "instance JSON file, or builtin:gm2 | builtin:full2 | builtin:id2")->required();
    cmd->add_option("--json", c.json_path, "write the canonical JSON report to PATH");
    if (!solver) return;
    cmd->add_option("--enum-max", c.enum_max, "product-partition enumeration guard")->capture_default_str();
    cmd->add_option("--cover-universe-max", c.universe_max, "set-cover universe guard")->capture_default_str();
    cmd->add_option("--cover-elems-max", c.elems_max, "set-cover residual elements guard")->capture_default_str();
}

Instance load(const std::string& file) {
    const std::string prefix = "builtin:";
    if (file.rfind(prefix, 0) == 0) return builtin_instance(file.substr(prefix.size()));
    return load_instance(file);
}

void write_json(const std::string& path, const json& j) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) fail(ErrorKind::precondition, "cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

std::string fmt(double x, const char* pattern = "%.6f") {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, x);
    return buf;
}

void print_report(const EntropyReport& r, const char* label) {
    std::printf("%4s  %-12s  %s\n", "n", label, "certified");
    for (std::size_t i = 0; i < r.sequence.size(); ++i)
        std::printf("%4d  %-12s  %s\n", r.sequence[i].first, fmt(r.sequence[i].second).c_str(), fmt(r.certified[i]).c_str());
    std::printf("certified upper  %s\n", fmt(r.certified_upper).c_str());
    if (r.exact_rate) std::printf("exact rate       %s\n", fmt(*r.exact_rate).c_str());
    std::printf("methods          ");
    for (std::size_t i = 0; i < r.methods.size(); ++i) std::printf("%s%s", i ? ", " : "", r.methods[i].c_str());
    std::printf("\n");
}

void print_matrix(const Matrix<double>& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::printf("    ");
        for (std::size_t c = 0; c < m.cols(); ++c) std::printf(" %s", fmt(m(r, c)).c_str());
        std::printf("\n");
    }
}

json header(const char* command, const Common& c) {
    return {{"schema_version", report_schema_version}, {"command", command}, {"file", c.file}};
}

int cmd_validate(const Common& c) {
    const auto inst = load(c.file);
    const auto d = validate(inst.bundle);
    for (const auto& issue : d.issues) std::cout << issue << "\n";
    if (d.ok()) std::cout << "ok: " << inst.bundle.omega_count() << " fibers, " << inst.bundle.alphabet_size()
                          << " symbols, " << inst.covers.size() << " covers, " << inst.transitions.size()
                          << " measures\n";
    auto j = header("validate", c);
    j["ok"] = d.ok();
    j["issues"] = d.issues;
    write_json(c.json_path, j);
    return d.ok() ? exit_ok : exit_failed;
}

int cmd_topent(const Common& c, const std::string& cover, int nmax) {
    const auto inst = load(c.file);
    require_valid(inst.bundle);
    const auto r = htop_estimate(inst.bundle, inst.cover(cover), nmax, c.limits());
    print_report(r, "H(T,U,n)/n");
    auto j = header("topent", c);
    j["cover"] = cover;
    j["nmax"] = nmax;
    j["report"] = to_json(r);
    write_json(c.json_path, j);
    return exit_ok;
}

struct MeasentArgs {
    std::string measure, partition, cover, mode = "general", kind = "minus";
    int nmax = 6;
};

int cmd_measent(const Common& c, const MeasentArgs& a) {
    const auto inst = load(c.file);
    require_valid(inst.bundle);
    const auto mu = inst.measure(a.measure);
    auto j = header("measent", c);
    j["measure"] = a.measure;
    j["nmax"] = a.nmax;
    if (!a.partition.empty()) {
        const auto r = h_partition_rate(inst.bundle, mu, inst.partition(a.partition), a.nmax, c.limits());
        print_report(r, "H(R_0^n-1)/n");
        j["partition"] = a.partition;
        j["report"] = to_json(r);
    } else if (a.kind == "plus") {
        const auto h = h_plus_estimate(inst.bundle, mu, inst.cover(a.cover), a.nmax, c.limits());
        std::printf("h_plus           %s\n", fmt(h.value).c_str());
        std::printf("candidates       %zu%s\n", h.candidates, h.complete ? "" : " (enumeration guard reached)");
        if (h.argmin) std::printf("argmin           #%zu\n%s\n", h.argmin_index, cover_to_json(inst.bundle, *h.argmin).dump().c_str());
        j["cover"] = a.cover;
        j["kind"] = "plus";
        j["report"] = to_json(inst.bundle, h);
    } else {
        const auto mode = a.mode == "product" ? CoverMode::product : CoverMode::general;
        const auto r = h_minus_estimate(inst.bundle, mu, inst.cover(a.cover), a.nmax, mode, c.limits());
        print_report(r, "H(U_0^n-1)/n");
        j["cover"] = a.cover;
        j["kind"] = "minus";
        j["mode"] = a.mode;
        j["report"] = to_json(r);
    }
    write_json(c.json_path, j);
    return exit_ok;
}

int cmd_witness(const Common& c, const std::string& cover, int n) {
    const auto inst = load(c.file);
    require_valid(inst.bundle);
    WitnessLimits limits;
    limits.entropy = c.limits();
    const auto w = misiurewicz_witness(inst.bundle, inst.cover(cover), n, std::nullopt, limits);
    const auto& base = inst.bundle.base();
    std::printf("n = %d, d = %zu, K = %zu partitions, horizon %d\n", w.n, w.cover_size, w.partitions.size(), w.horizon);
    for (Fiber f = 0; f < w.fibers.size(); ++f) {
        const auto& x = w.fibers[f];
        std::printf("fiber %-6s |C_n| = %zu  N_pulled = %zu  N_full = %zu  floor(N/K) = %zu\n", base.label(f).c_str(),
                    x.words.size(), x.pulled_count, x.full_count, x.bound);
    }
    std::printf("fiber bounds (lhs >= ln floor(N'/n) >= ln floor(N/(n d^n)))\n");
    for (const auto& b : w.fiber_bounds)
        std::printf("  %s fiber %-6s i=%d l=%zu  %s >= %s >= %s\n", b.holds ? "ok  " : "FAIL", base.label(b.fiber).c_str(),
                    b.shift, b.partition, fmt(b.lhs).c_str(), fmt(b.middle).c_str(), fmt(b.rhs).c_str());
    std::printf("averaged bounds (H_mu >= average >= (m/(n^2+n))(integral - m ln d))\n");
    for (const auto& b : w.average_bounds)
        std::printf("  %s l=%zu m=%d  %s >= %s >= %s\n", b.holds ? "ok  " : "FAIL", b.partition, b.m, fmt(b.lhs).c_str(),
                    fmt(b.middle).c_str(), fmt(b.rhs).c_str());
    std::printf("mu_n: horizon %d", w.mu.horizon);
    for (Fiber f = 0; f < w.mu.fibers.size(); ++f)
        std::printf(", %s support %zu", base.label(f).c_str(), w.mu.fibers[f].size());
    std::printf("\n%s\n", w.all_hold() ? "all bounds hold" : "some bounds FAIL");
    auto j = header("witness", c);
    j["cover"] = cover;
    j["witness"] = to_json(inst.bundle, w);
    write_json(c.json_path, j);
    return w.all_hold() ? exit_ok : exit_failed;
}

struct MaximizeArgs {
    std::string partition, cover;
    MaximizeOptions options;
    std::string mode = "general";
};

int cmd_maximize(const Common& c, MaximizeArgs a) {
    const auto inst = load(c.file);
    require_valid(inst.bundle);
    const bool use_partition = !a.partition.empty();
    const PositionedCover target = use_partition ? PositionedCover(inst.partition(a.partition)) : inst.cover(a.cover);
    a.options.limits = c.limits();
    a.options.mode = a.mode == "product" ? CoverMode::product : CoverMode::general;
    const auto r = maximize_partition_entropy(inst.bundle, target, a.options);
    std::printf("objective        %s\n", r.objective.c_str());
    std::printf("best value       %s\n", fmt(r.value).c_str());
    std::printf("htop             %s\n", fmt(r.htop).c_str());
    std::printf("gap              %s\n", fmt(r.gap).c_str());
    std::printf("evaluations      %zu\n", r.evaluations);
    std::printf("above htop       %zu\n", r.above_htop);
    for (Fiber w = 0; w < inst.bundle.omega_count(); ++w) {
        std::printf("Q[%s]\n", inst.bundle.base().label(w).c_str());
        print_matrix(r.best.transitions[w]);
    }
    auto j = header("maximize", c);
    j[use_partition ? "partition" : "cover"] = use_partition ? a.partition : a.cover;
    j["budget"] = a.options.budget;
    j["seed"] = a.options.seed;
    j["result"] = to_json(inst.bundle, r);
    write_json(c.json_path, j);
    return exit_ok;
}

struct VerifyArgs {
    std::string file, caps, only;
    SuiteConfig config;
};

int cmd_verify(const Common& c, VerifyArgs a) {
    if (!a.file.empty()) a.config.file = load(a.file);
    if (!a.caps.empty()) a.config.caps = parse_caps(a.caps, a.config.caps);
    if (!a.only.empty()) {
        std::stringstream ss(a.only);
        for (std::string id; std::getline(ss, id, ',');)
            if (!id.empty()) a.config.only.push_back(id);
    }
    const auto r = run_suite(a.config);
    std::printf("%-28s %-5s %8s %8s %8s  %s\n", "check", "kind", "passed", "failed", "skipped", "worst margin");
    for (const auto& [id, s] : r.checks)
        std::printf("%-28s %-5s %8zu %8zu %8zu  %s\n", id.c_str(), to_string(s.kind), s.passed, s.failed, s.skipped,
                    fmt(s.worst_margin, "%.3e").c_str());
    for (const auto& f : r.failures)
        std::printf("FAIL %s (%s): %s%s\n", f.id.c_str(), to_string(f.kind), f.detail.c_str(),
                    f.instance_seed ? (", instance seed " + std::to_string(*f.instance_seed)).c_str() : "");
    std::printf("exact failures %zu, soft failures %zu\n", r.exact_failures, r.soft_failures);
    write_json(c.json_path, r.to_json(a.config));
    return r.ok() ? exit_ok : exit_failed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rde_lab: entropy of random subshifts of finite type"};
    app.footer(exit_help);
    app.require_subcommand(1);

    Common common;
    int result = exit_ok;
    std::function<int()> action;

    auto* validate_cmd = app.add_subcommand("validate", "check an instance for dead symbols and base consistency");
    add_common(validate_cmd, common);
    validate_cmd->callback([&] { action = [&] { return cmd_validate(common); }; });

    std::string cover;
    int nmax = 6;
    auto* topent = app.add_subcommand("topent", "topological entropy of a cover");
    add_common(topent, common);
    topent->add_option("--cover", cover, "cover name")->required();
    topent->add_option("--nmax", nmax, "largest n")->capture_default_str()->check(CLI::PositiveNumber);
    topent->callback([&] { action = [&] { return cmd_topent(common, cover, nmax); }; });

    MeasentArgs ma;
    auto* measent = app.add_subcommand("measent", "measure-theoretic entropy of a partition or cover");
    add_common(measent, common);
    measent->add_option("--measure", ma.measure, "measure name")->required();
    auto* part_opt = measent->add_option("--partition", ma.partition, "partition name (a disjoint cover)");
    auto* cover_opt = measent->add_option("--cover", ma.cover, "cover name");
    part_opt->excludes(cover_opt);
    measent->add_option("--mode", ma.mode, "infimum class for h-")
        ->check(CLI::IsMember({"general", "product"}))
        ->capture_default_str();
    measent->add_option("--kind", ma.kind, "minus or plus")->check(CLI::IsMember({"minus", "plus"}))->capture_default_str();
    measent->add_option("--nmax", ma.nmax, "largest n")->capture_default_str()->check(CLI::PositiveNumber);
    measent->callback([&] {
        if (ma.partition.empty() == ma.cover.empty()) throw CLI::ValidationError("measent", "give one of --partition, --cover");
        action = [&] { return cmd_measent(common, ma); };
    });

    int witness_n = 2;
    auto* witness = app.add_subcommand("witness", "finite-n lower bound construction for h+");
    add_common(witness, common);
    witness->add_option("--cover", cover, "product-form cover name")->required();
    witness->add_option("--n", witness_n, "n")->capture_default_str()->check(CLI::PositiveNumber);
    witness->callback([&] { action = [&] { return cmd_witness(common, cover, witness_n); }; });

    MaximizeArgs xa;
    auto* maximize = app.add_subcommand("maximize", "search invariant Markov measures for the largest entropy");
    add_common(maximize, common);
    auto* xp = maximize->add_option("--partition", xa.partition, "partition name");
    auto* xc = maximize->add_option("--cover", xa.cover, "cover name (objective h-)");
    xp->excludes(xc);
    maximize->add_option("--budget", xa.options.budget, "objective evaluations")->capture_default_str();
    maximize->add_option("--seed", xa.options.seed, "random seed")->capture_default_str();
    maximize->add_option("--nmax", xa.options.nmax, "finite-n objective horizon")->capture_default_str();
    maximize->add_option("--mode", xa.mode, "infimum class for h-")
        ->check(CLI::IsMember({"general", "product"}))
        ->capture_default_str();
    maximize->callback([&] {
        if (xa.partition.empty() == xa.cover.empty()) throw CLI::ValidationError("maximize", "give one of --partition, --cover");
        action = [&] { return cmd_maximize(common, xa); };
    });

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "run the property suite");
    add_common(verify, common, false);
    auto* vf = verify->add_option("--file", va.file, "check this instance instead of generated ones");
    auto* vs = verify->add_option("--seed", va.config.seed, "suite seed")->capture_default_str();
    vf->excludes(vs);
    verify->add_option("--instances", va.config.instances, "generated instances")->capture_default_str();
    verify->add_option("--caps", va.caps, "size caps, e.g. omega=4,alphabet=3,window=2,nmax=4,horizon=14");
    verify->add_option("--only", va.only, "comma-separated check-id prefixes");
    verify->add_flag("--inject-fault", va.config.inject_fault, "perturb one transition entry of m0");
    verify->add_option("--threads", va.config.threads, "worker threads (0: RDE_LAB_THREADS or hardware)");
    verify->add_option("--budget", va.config.budget, "optimizer budget of the gap check")->capture_default_str();
    verify->callback([&] { action = [&] { return cmd_verify(common, va); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }
    try {
        result = action();
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        result = exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        result = exit_internal;
    }
    return result;
}
