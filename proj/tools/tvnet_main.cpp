#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tvnet/errors.hpp"
#include "tvnet/experiment.hpp"
#include "tvnet/parallel.hpp"

namespace {

struct Common {
    std::string manifest;
    std::string out;
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    std::optional<tvnet::Index> n;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed) {
    cmd->add_option("--manifest", c.manifest, "Experiment manifest (JSON)")->required();
    cmd->add_option("--out", c.out, "Override the manifest's output_dir");
    cmd->add_option("--jobs", c.jobs, "Worker threads (0 = OpenMP default)");
    if (with_seed) {
        cmd->add_option("--seed", c.seed, "Single seed (default: every manifest seed)");
        cmd->add_option("--n", c.n, "Single dimension (default: every manifest dimension)");
    }
}

tvnet::ExperimentManifest load(const Common& c) {
    tvnet::ExperimentManifest m = tvnet::load_manifest(c.manifest);
    if (!c.out.empty()) m.output_dir = c.out;
    if (c.jobs > 0) tvnet::set_threads(c.jobs);
    return m;
}

template <class Fn>
void for_each_seed(const tvnet::ExperimentManifest& m, const Common& c, Fn&& fn) {
    for (tvnet::Index n : m.dims) {
        if (c.n && *c.n != n) continue;
        for (std::uint64_t s : m.seeds) {
            if (c.seed && *c.seed != s) continue;
            fn(n, s);
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying network structure estimation with learned basis structures"};
    app.require_subcommand(1);

    Common gen, fit, ev, exp;
    std::string method;
    bool oracle = false;

    auto* g = app.add_subcommand("generate", "Generate synthetic sequences and ground truth");
    add_common(g, gen, true);
    auto* f = app.add_subcommand("fit", "Fit one method");
    add_common(f, fit, true);
    f->add_option("--method", method, "keller | pca | basis | basis-supervised")->required();
    auto* e = app.add_subcommand("eval", "Evaluate fitted methods");
    add_common(e, ev, true);
    e->add_flag("--oracle", oracle, "Add a row scored by the true trajectory contrast");
    auto* x = app.add_subcommand("experiment", "generate -> fit -> eval for every seed, then aggregate");
    add_common(x, exp, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*g) {
            const auto m = load(gen);
            for_each_seed(m, gen, [&](tvnet::Index n, std::uint64_t s) {
                const auto r = tvnet::run_generate(m, n, s);
                std::cout << "n=" << n << " seed=" << s << (r.up_to_date ? ": up-to-date" : ": generated")
                          << "\n";
            });
        } else if (*f) {
            const auto m = load(fit);
            const tvnet::Method mt = tvnet::method_from_string(method);
            for_each_seed(m, fit, [&](tvnet::Index n, std::uint64_t s) {
                const auto r = tvnet::run_fit(m, n, s, mt);
                std::cout << "n=" << n << " seed=" << s << " " << method
                          << (r.up_to_date ? ": up-to-date" : ": fitted") << "\n";
            });
        } else if (*e) {
            const auto m = load(ev);
            std::vector<tvnet::EvalRow> rows;
            for_each_seed(m, ev, [&](tvnet::Index n, std::uint64_t s) {
                for (auto& r : tvnet::run_eval(m, n, s, oracle).rows) rows.push_back(r);
            });
            std::cout << tvnet::rows_to_csv(rows);
        } else if (*x) {
            const auto m = load(exp);
            const auto summary = tvnet::run_experiment(m, std::cerr);
            std::cout << tvnet::aggregate_to_csv(summary.aggregate);
            if (!summary.failures.empty()) return summary.failures.front().exit_code;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return tvnet::exit_code_for(err);
    }
    return 0;
}
