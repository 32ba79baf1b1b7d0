#include <algorithm>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "llsh/errors.hpp"

// Exit codes: 0 success, 1 usage/config error, 2 data error.

namespace {

// Flat key=value config files: each `--config FILE` in the argument list is
// replaced in place by `--key=value` tokens, so explicit flags given after
// it override the file (options take the last occurrence). Unknown keys
// surface as unknown options. '#' starts a comment.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> out;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        std::string path;
        if (arg == "--config") {
            if (i + 1 >= argc) throw std::invalid_argument("--config needs a file argument");
            path = argv[++i];
        } else if (arg.rfind("--config=", 0) == 0) {
            path = arg.substr(9);
        } else {
            out.push_back(std::move(arg));
            continue;
        }
        std::ifstream is(path);
        if (!is) throw std::invalid_argument("cannot open config file " + path);
        std::string line;
        size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            auto begin = line.find_first_not_of(" \t\r");
            if (begin == std::string::npos) continue;
            auto end = line.find_last_not_of(" \t\r");
            std::string entry = line.substr(begin, end - begin + 1);
            if (entry.find('=') == std::string::npos) {
                throw std::invalid_argument(path + ": line " + std::to_string(line_no) +
                                            ": expected key=value");
            }
            out.push_back("--" + entry);
        }
    }
    return out;
}

void take_last_everywhere(CLI::App* app) {
    for (auto* opt : app->get_options()) {
        if (opt->get_expected_min() > 0 && opt->get_items_expected_max() == 1) {
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        }
    }
    for (auto* sub : app->get_subcommands({})) take_last_everywhere(sub);
}

void add_train_flags(CLI::App* cmd, double& lr, uint64_t& batch, uint64_t& epochs,
                     uint64_t& patience, double& holdout) {
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--batch-size", batch, "minibatch size");
    cmd->add_option("--max-epochs", epochs, "training epoch cap");
    cmd->add_option("--patience", patience, "early-stop patience in epochs");
    cmd->add_option("--holdout", holdout, "holdout fraction for early stopping");
}

template <typename T>
void add_shape_flags(CLI::App* cmd, T& s) {
    cmd->add_option("--L", s.L, "number of tables / hash units");
    cmd->add_option("--K", s.K, "hash functions per table");
    cmd->add_option("--r", s.r, "projection segment width");
    cmd->add_option("--M", s.M, "layers per hash unit");
    cmd->add_option("--m1", s.m1, "autoencoder hidden width");
    cmd->add_option("--m2", s.m2, "code dimension");
    cmd->add_option("--m3", s.m3, "hash unit hidden width");
    cmd->add_option("--ensemble-size", s.ensemble_size,
                    "label blocks averaged for llsh-ensemble");
    cmd->add_option("--leaf-size", s.leaf_size, "tree leaf size");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"llsh: classical and learned locality-sensitive hashing benchmark kit", "llsh"};
    app.footer("Any subcommand accepts --config FILE with flat key=value lines; "
               "flags given after --config override the file.");
    app.require_subcommand(1);

    llsh::cli::GenSettings gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate a synthetic dataset");
    cmd_gen->add_option("--kind", gen.kind, "uniform|normal|lognormal|exponential");
    cmd_gen->add_option("--n", gen.n, "number of points")->required();
    cmd_gen->add_option("--d", gen.d, "dimension")->required();
    cmd_gen->add_option("--seed", gen.seed, "generator seed");
    cmd_gen->add_option("--out", gen.out, "output path")->required();
    cmd_gen->add_option("--format", gen.format, "llshbin|csv (default: by extension)");

    llsh::cli::BuildSettings build;
    auto* cmd_build = app.add_subcommand("build", "build an index / train a model");
    cmd_build->add_option("--algo", build.algo, "e2lsh|llsh|llsh-ensemble|brute|kdtree|balltree");
    cmd_build->add_option("--data", build.data_path, "dataset file")->required();
    cmd_build->add_option("--out", build.out, "index output path (E2LX/LLIX)");
    cmd_build->add_option("--model-out", build.model_out, "also dump the LLM1 model");
    cmd_build->add_option("--report", build.report_csv, "write a one-row CSV report");
    cmd_build->add_option("--seed", build.seed, "build/train seed");
    add_shape_flags(cmd_build, build);
    add_train_flags(cmd_build, build.lr, build.batch_size, build.max_epochs, build.patience,
                    build.holdout);

    llsh::cli::QuerySettings query;
    auto* cmd_query = app.add_subcommand("query", "run top-k queries against a saved index");
    cmd_query->add_option("--index", query.index_path, "E2LX or LLIX file")->required();
    cmd_query->add_option("--queries", query.query_path, "query vectors (llshbin/csv)")
        ->required();
    cmd_query->add_option("--data", query.data_path, "override the recorded dataset path");
    cmd_query->add_option("--topk", query.topk, "neighbors per query");
    cmd_query->add_option("--out", query.out, "JSON-lines output (default: stdout)");

    llsh::cli::BenchSettings bench;
    auto* cmd_bench = app.add_subcommand("bench", "run measurement cells and emit report rows");
    cmd_bench->add_option("--algos", bench.algos, "algorithms to measure")->delimiter(',');
    cmd_bench->add_option("--data", bench.data_path, "dataset file (default: synthetic)");
    cmd_bench->add_option("--kind", bench.kind, "synthetic distribution");
    cmd_bench->add_option("--n", bench.n, "synthetic dataset size");
    cmd_bench->add_option("--d", bench.d, "synthetic dimension");
    cmd_bench->add_option("--queries", bench.num_queries, "held-out queries per cell");
    cmd_bench->add_option("--topk", bench.topk, "neighbors per query");
    cmd_bench->add_option("--seeds", bench.seeds, "seeds, one run per seed")->delimiter(',');
    cmd_bench->add_option("--sweep-axis", bench.sweep_axis, "L|K|M|n|d");
    cmd_bench->add_option("--sweep-grid", bench.sweep_grid, "values for the sweep axis")
        ->delimiter(',');
    cmd_bench->add_option("--out", bench.out_csv, "CSV output (default: stdout)");
    cmd_bench->add_option("--json", bench.out_json, "JSON-lines output");
    add_shape_flags(cmd_bench, bench);
    add_train_flags(cmd_bench, bench.lr, bench.batch_size, bench.max_epochs, bench.patience,
                    bench.holdout);

    llsh::cli::InspectSettings inspect;
    auto* cmd_inspect = app.add_subcommand("inspect", "describe a dataset/index/model file");
    cmd_inspect->add_option("path", inspect.path, "file to inspect")->required();

    try {
        take_last_everywhere(&app);
        std::vector<std::string> args = expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(std::move(args));
        if (cmd_gen->parsed()) return llsh::cli::run_gen(gen);
        if (cmd_build->parsed()) return llsh::cli::run_build(build);
        if (cmd_query->parsed()) return llsh::cli::run_query(query);
        if (cmd_bench->parsed()) return llsh::cli::run_bench(bench);
        if (cmd_inspect->parsed()) return llsh::cli::run_inspect(inspect);
        std::cerr << app.help();
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const llsh::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (...) {
        std::cerr << "error: unknown failure\n";
        return 2;
    }
}
