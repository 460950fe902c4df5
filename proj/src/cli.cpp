#include "pdr/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pdr/error.hpp"
#include "pdr/evaluation.hpp"
#include "pdr/parallel.hpp"
#include "pdr/profile.hpp"
#include "pdr/synthgen.hpp"

namespace pdr::cli {

double default_alpha(WeightFamily family, Method method) {
    switch (family) {
    case WeightFamily::linear: return 1.0;
    case WeightFamily::polynomial: return 2.0;
    case WeightFamily::exponential:
        return (method == Method::ref || method == Method::min_k_pp) ? 0.02 : 0.002;
    default: return 0.0;
    }
}

namespace {

std::vector<SweepRow> sweep(const std::vector<SequenceRecord>& corpus, const std::vector<Method>& methods,
                            const ScoreSpec& base, const std::vector<double>& values, bool vary_alpha,
                            double max_fpr, unsigned threads) {
    if (values.empty()) {
        throw UsageError("sweep needs at least one value");
    }
    if (methods.empty()) {
        throw UsageError("sweep needs at least one method");
    }
    std::vector<SweepRow> rows;
    for (const Method method : methods) {
        for (const double v : values) {
            ScoreSpec spec = base;
            spec.method = method;
            if (vary_alpha) {
                if (!spec.weights) {
                    spec.weights = WeightSpec{};
                }
                spec.weights->alpha = v;
            } else {
                spec.truncation_rho = v;
            }
            const auto scores = score_corpus(spec, corpus, threads);
            const auto report = evaluate(scores, max_fpr);
            SweepRow row;
            row.method = method;
            row.family = spec.weights ? std::string(to_string(spec.weights->family)) : "none";
            row.alpha = spec.weights ? spec.weights->alpha : 0.0;
            row.rho = spec.truncation_rho.value_or(1.0);
            row.auroc = report.auroc;
            row.tpr_at_fpr = report.tpr_at_fpr;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

} // namespace

std::vector<SweepRow> alpha_sweep(const std::vector<SequenceRecord>& corpus, const std::vector<Method>& methods,
                                  const ScoreSpec& base, const std::vector<double>& alphas, double max_fpr,
                                  unsigned threads) {
    return sweep(corpus, methods, base, alphas, true, max_fpr, threads);
}

std::vector<SweepRow> truncation_sweep(const std::vector<SequenceRecord>& corpus, const std::vector<Method>& methods,
                                       const ScoreSpec& base, const std::vector<double>& fractions, double max_fpr,
                                       unsigned threads) {
    return sweep(corpus, methods, base, fractions, false, max_fpr, threads);
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::string out = "method\tfamily\talpha\trho\tauroc\ttpr_at_fpr\n";
    for (const auto& r : rows) {
        out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", to_string(r.method), r.family, r.alpha, r.rho, r.auroc,
                           r.tpr_at_fpr);
    }
    return out;
}

namespace {

struct ScoreFlags {
    std::string method = "loss";
    double k = 20.0;
    std::string weights = "none";
    std::optional<double> alpha;
    std::string ordering = "forward";
    bool slope_alpha = false;
    std::string stage = "after";
    std::optional<double> truncate;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
};

void add_spec_flags(CLI::App* sub, ScoreFlags& f, bool with_method) {
    if (with_method) {
        sub->add_option("--method", f.method, "loss | ref | zlib | lowercase | min_k | min_k_pp")->capture_default_str();
    }
    sub->add_option("--k", f.k, "Min-k% percentage")->capture_default_str();
    sub->add_option("--weights", f.weights,
                    "none | constant | linear | exponential | polynomial | entropy_sample | entropy_dataset")
        ->capture_default_str();
    sub->add_option("--ordering", f.ordering, "forward | reverse | random")->capture_default_str();
    sub->add_flag("--slope-alpha", f.slope_alpha, "use each sample's loss slope as the linear decay alpha");
    sub->add_option("--stage", f.stage, "min-k weighting stage: after | before")->capture_default_str();
    f.seed_opt = sub->add_option("--seed", f.seed, "seed for random orderings");
}

ScoreSpec build_spec(const ScoreFlags& f, Method method) {
    ScoreSpec spec;
    spec.method = method;
    spec.k_percent = f.k;
    spec.stage = parse_stage(f.stage);
    spec.truncation_rho = f.truncate;
    const Ordering ordering = parse_ordering(f.ordering);
    if (f.weights != "none") {
        WeightSpec w;
        w.family = parse_weight_family(f.weights);
        w.alpha = f.alpha.value_or(default_alpha(w.family, method));
        w.ordering = ordering;
        w.alpha_from_slope = f.slope_alpha;
        if (ordering == Ordering::random) {
            if (f.seed_opt->count() == 0) {
                throw UsageError("--ordering random requires --seed");
            }
            w.ordering_seed = f.seed;
        }
        spec.weights = w;
    } else if (ordering != Ordering::forward || f.slope_alpha || f.alpha) {
        throw UsageError("--ordering, --alpha and --slope-alpha need --weights");
    }
    validate(spec);
    return spec;
}

// Writes `text` to `path`, or to `out` for "-". File output appears only on success.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        out.flush();
        return;
    }
    const std::string tmp = path + ".partial";
    {
        std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
        if (!file) {
            throw UsageError("cannot write '" + path + "'");
        }
        file << text;
        file.close();
        if (!file) {
            std::remove(tmp.c_str());
            throw std::runtime_error("write to '" + path + "' failed");
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move output into '" + path + "'");
    }
}

std::vector<SequenceRecord> load_corpus(const std::string& path) {
    const std::string text = read_input(path);
    try {
        return parse_records(std::string_view(text));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::vector<ScoredSample> load_scores(const std::string& path) {
    const std::string text = read_input(path);
    try {
        return parse_scores(std::string_view(text));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string scores_text(const std::vector<ScoredSample>& samples) {
    std::ostringstream os;
    write_scores(os, samples);
    return os.str();
}

std::string records_text(const std::vector<SequenceRecord>& records) {
    std::ostringstream os;
    write_records(os, records);
    return os.str();
}

std::vector<double> parse_number_list(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& item : items) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size()) {
            throw UsageError("'" + item + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw UsageError("sweep value list is empty");
    }
    return out;
}

std::string profile_table(const std::vector<SequenceRecord>& corpus, ProfileStat stat, bool by_label) {
    std::string out = "position\tgroup\tmean\tcount\n";
    const auto rows = [&out](const PositionProfile& p, std::string_view group) {
        for (std::size_t i = 0; i < p.mean.size(); ++i) {
            out += fmt::format("{}\t{}\t{}\t{}\n", i + 1, group, p.mean[i], p.count[i]);
        }
    };
    if (by_label) {
        const auto p = position_profile_by_label(corpus, stat);
        rows(p.members, "member");
        rows(p.nonmembers, "nonmember");
    } else {
        rows(position_profile(corpus, stat), "all");
    }
    return out;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Positional-decay membership scoring and evaluation"};
    app.name(args.empty() ? "pdr" : args.front());
    app.require_subcommand(1);

    unsigned threads = default_threads();
    app.add_option("--threads", threads, "worker threads (default: PDR_THREADS or hardware)");

    // score
    auto* score_cmd = app.add_subcommand("score", "Score a corpus, one line per record");
    std::string score_in;
    std::string score_out = "-";
    std::string fsd_with;
    ScoreFlags score_flags;
    score_cmd->add_option("-i,--input", score_in, "corpus file ('-' for stdin)")->required();
    score_cmd->add_option("-o,--output", score_out, "score file ('-' for stdout)");
    score_cmd->add_option("--alpha", score_flags.alpha, "decay parameter (default depends on family and method)");
    score_cmd->add_option("--truncate", score_flags.truncate, "keep this fraction of each sequence's prefix");
    score_cmd->add_option("--fsd-with", fsd_with, "corpus from the fine-tuned model; emits score differences");
    add_spec_flags(score_cmd, score_flags, true);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "AUROC and TPR@FPR of a score file");
    std::string eval_in;
    std::string eval_out = "-";
    double eval_fpr = kDefaultTargetFpr;
    std::size_t eval_boot = 0;
    std::uint64_t eval_seed = 0;
    std::string eval_format = "json";
    eval_cmd->add_option("-i,--input", eval_in, "score file")->required();
    eval_cmd->add_option("-o,--output", eval_out, "report file ('-' for stdout)");
    eval_cmd->add_option("--fpr", eval_fpr, "target false-positive rate")->capture_default_str();
    eval_cmd->add_option("--bootstrap", eval_boot, "bootstrap replicates (0 = none)")->capture_default_str();
    auto* eval_seed_opt = eval_cmd->add_option("--seed", eval_seed, "bootstrap seed");
    eval_cmd->add_option("--format", eval_format, "json | table")->capture_default_str();

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "Paired bootstrap test of AUROC(a) > AUROC(b)");
    std::string cmp_a;
    std::string cmp_b;
    std::string cmp_out = "-";
    std::size_t cmp_boot = 1000;
    std::uint64_t cmp_seed = 0;
    std::string cmp_format = "json";
    cmp_cmd->add_option("-a,--a", cmp_a, "score file of the candidate method")->required();
    cmp_cmd->add_option("-b,--b", cmp_b, "score file of the baseline method")->required();
    cmp_cmd->add_option("-o,--output", cmp_out, "report file ('-' for stdout)");
    cmp_cmd->add_option("--bootstrap", cmp_boot, "bootstrap replicates")->capture_default_str();
    cmp_cmd->add_option("--seed", cmp_seed, "bootstrap seed")->required();
    cmp_cmd->add_option("--format", cmp_format, "json | table")->capture_default_str();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "AUROC table over decay parameters or truncation fractions");
    std::string sweep_in;
    std::string sweep_out = "-";
    std::vector<std::string> sweep_methods;
    std::vector<std::string> sweep_alphas;
    std::vector<std::string> sweep_fractions;
    double sweep_fpr = kDefaultTargetFpr;
    ScoreFlags sweep_flags;
    sweep_cmd->add_option("-i,--input", sweep_in, "corpus file")->required();
    sweep_cmd->add_option("-o,--output", sweep_out, "table file ('-' for stdout)");
    sweep_cmd->add_option("--method", sweep_methods, "methods to sweep (repeatable or comma separated)")
        ->delimiter(',');
    auto* alphas_opt =
        sweep_cmd->add_option("--alphas", sweep_alphas, "decay parameters, comma separated")->delimiter(',');
    auto* trunc_opt = sweep_cmd->add_option("--truncate", sweep_fractions, "retain fractions, comma separated")
                          ->delimiter(',');
    sweep_cmd->add_option("--fpr", sweep_fpr, "target false-positive rate")->capture_default_str();
    add_spec_flags(sweep_cmd, sweep_flags, false);
    alphas_opt->excludes(trunc_opt);

    // profile
    auto* prof_cmd = app.add_subcommand("profile", "Per-position mean entropy or log-probability");
    std::string prof_in;
    std::string prof_out = "-";
    std::string prof_stat = "logp";
    std::string prof_group = "label";
    prof_cmd->add_option("-i,--input", prof_in, "corpus file")->required();
    prof_cmd->add_option("-o,--output", prof_out, "table file ('-' for stdout)");
    prof_cmd->add_option("--stat", prof_stat, "entropy | logp")->capture_default_str();
    prof_cmd->add_option("--group-by", prof_group, "label | none")->capture_default_str();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic member/non-member corpus");
    SynthParams sp;
    std::string synth_out = "-";
    synth_cmd->add_option("-o,--output", synth_out, "corpus file ('-' for stdout)");
    synth_cmd->add_option("--length", sp.length, "tokens per record")->capture_default_str();
    synth_cmd->add_option("--members", sp.n_members, "member records")->capture_default_str();
    synth_cmd->add_option("--nonmembers", sp.n_nonmembers, "non-member records")->capture_default_str();
    synth_cmd->add_option("--h0", sp.h0, "initial entropy (nats)")->capture_default_str();
    synth_cmd->add_option("--h-inf", sp.h_inf, "asymptotic entropy (nats)")->capture_default_str();
    synth_cmd->add_option("--lambda", sp.lambda, "entropy decay rate")->capture_default_str();
    synth_cmd->add_option("--boost0", sp.boost0, "member log-prob boost at position 1")->capture_default_str();
    synth_cmd->add_option("--gamma", sp.gamma, "boost decay rate")->capture_default_str();
    synth_cmd->add_option("--noise", sp.noise, "per-token noise scale")->capture_default_str();
    synth_cmd->add_option("--seed", sp.seed, "generator seed")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (threads == 0) {
        threads = 1;
    }

    try {
        if (score_cmd->parsed()) {
            const Method method = parse_method(score_flags.method);
            const ScoreSpec spec = build_spec(score_flags, method);
            const auto corpus = load_corpus(score_in);
            std::vector<ScoredSample> scores;
            if (fsd_with.empty()) {
                scores = score_corpus(spec, corpus, threads);
            } else {
                scores = fsd_score_corpus(spec, corpus, load_corpus(fsd_with), threads);
            }
            emit(score_out, scores_text(scores), out);
        } else if (eval_cmd->parsed()) {
            if (eval_format != "json" && eval_format != "table") {
                throw UsageError("--format must be json or table");
            }
            if (eval_boot > 0 && eval_seed_opt->count() == 0) {
                throw UsageError("--bootstrap requires --seed");
            }
            const auto scores = load_scores(eval_in);
            const EvalReport report = eval_boot > 0 ? bootstrap_eval(scores, eval_boot, eval_seed, eval_fpr, threads)
                                                    : evaluate(scores, eval_fpr);
            emit(eval_out, eval_format == "json" ? to_json_line(report) + "\n" : to_table(report), out);
        } else if (cmp_cmd->parsed()) {
            if (cmp_format != "json" && cmp_format != "table") {
                throw UsageError("--format must be json or table");
            }
            const auto a = load_scores(cmp_a);
            const auto b = load_scores(cmp_b);
            const PairedReport report = paired_bootstrap(a, b, cmp_boot, cmp_seed, threads);
            emit(cmp_out, cmp_format == "json" ? to_json_line(report) + "\n" : to_table(report), out);
        } else if (sweep_cmd->parsed()) {
            const bool by_alpha = alphas_opt->count() > 0;
            const bool by_trunc = trunc_opt->count() > 0;
            if (!by_alpha && !by_trunc) {
                throw UsageError("sweep needs --alphas or --truncate");
            }
            if (by_alpha && sweep_flags.weights == "none") {
                sweep_flags.weights = "linear";
            }
            const auto values = parse_number_list(by_alpha ? sweep_alphas : sweep_fractions);
            std::vector<Method> methods;
            for (const auto& m : sweep_methods) {
                methods.push_back(parse_method(m));
            }
            if (methods.empty()) {
                methods = {Method::loss, Method::ref, Method::min_k, Method::min_k_pp};
            }
            // The spec is built per method so family defaults resolve correctly; alpha is overridden per row.
            const auto corpus = load_corpus(sweep_in);
            std::vector<SweepRow> rows;
            for (const Method m : methods) {
                ScoreSpec base = build_spec(sweep_flags, m);
                auto part = by_alpha ? alpha_sweep(corpus, {m}, base, values, sweep_fpr, threads)
                                     : truncation_sweep(corpus, {m}, base, values, sweep_fpr, threads);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            emit(sweep_out, sweep_table(rows), out);
        } else if (prof_cmd->parsed()) {
            const ProfileStat stat = parse_profile_stat(prof_stat);
            if (prof_group != "label" && prof_group != "none") {
                throw UsageError("--group-by must be label or none");
            }
            const auto corpus = load_corpus(prof_in);
            emit(prof_out, profile_table(corpus, stat, prof_group == "label"), out);
        } else if (synth_cmd->parsed()) {
            emit(synth_out, records_text(generate_corpus(sp, threads)), out);
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}

} // namespace pdr::cli
