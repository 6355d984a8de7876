#include "dbn/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dbn/chmm.hpp"
#include "dbn/decoding.hpp"
#include "dbn/equivalence.hpp"
#include "dbn/errors.hpp"
#include "dbn/inference.hpp"
#include "dbn/learning.hpp"
#include "dbn/model_io.hpp"

namespace dbn {

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

namespace {

struct Options {
    std::string model;
    std::string obs;
    std::string out;
    std::string states_out;
    std::uint64_t seed = 0;
    std::size_t length = 0;
    std::size_t count = 1;
    std::size_t horizon = 1;
    std::size_t particles = 0;
    std::size_t prefix = 0;
    std::size_t max_iters = 200;
    double tol = 1e-6;
    double pseudocount = 0.0;
    double resample_threshold = 0.5;
    bool pairwise = false;
};

/// Wraps model-level failures with the file they came from.
AnyModel load_checked(const std::string& path) {
    try {
        return load_model(path);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

/// Converts whatever was loaded into something the HMM routines accept.
/// Two-slice templates are unrolled; coupled models are left to the caller.
HmmModel as_hmm(const AnyModel& model) {
    if (const auto* h = std::get_if<HmmModel>(&model)) return *h;
    if (const auto* t = std::get_if<Tbn2Model>(&model)) return unroll_tbn(*t);
    return flatten_chmm(std::get<ChmmModel>(model));
}

std::vector<std::string> inline_sequences(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) out.push_back(part);
    return out;
}

template <typename Seq, typename FromFile, typename ParseLine>
std::vector<Seq> read_sequences(const std::string& source, FromFile from_file, ParseLine parse_line) {
    if (source.empty()) throw ParseError("--obs: no observations given");
    if (std::filesystem::exists(source)) return from_file(source);
    std::vector<Seq> out;
    try {
        for (const auto& part : inline_sequences(source)) out.push_back(parse_line(part));
    } catch (const ParseError& e) {
        throw ParseError(std::string("--obs: ") + e.what());
    }
    return out;
}

std::vector<ObsSequence> single_stream_obs(const std::string& source) {
    return read_sequences<ObsSequence>(
        source, [](const std::string& p) { return load_obs(p); }, parse_obs_line);
}

std::vector<MultiObsSequence> multi_stream_obs(const std::string& source) {
    return read_sequences<MultiObsSequence>(
        source, [](const std::string& p) { return load_multi_obs(p); }, parse_multi_obs_line);
}

void print_row(std::ostream& out, const std::string& label, std::span<const double> values) {
    out << label;
    for (double v : values) out << '\t' << format_number(v);
    out << '\n';
}

void print_table(std::ostream& out, std::size_t sequence, const Matrix& table) {
    out << "# sequence " << sequence << '\n';
    for (std::size_t t = 0; t < table.rows(); ++t) print_row(out, std::to_string(t), table.row(t));
}

class OutputFile {
public:
    OutputFile(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            stream_ = &fallback;
            return;
        }
        file_.open(path);
        if (!file_) throw ParseError(path + ": cannot open file for writing");
        stream_ = &file_;
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_ = nullptr;
};

// ---------------------------------------------------------------------------
// Subcommands

int cmd_validate(const Options& o, std::ostream&) {
    load_checked(o.model);
    return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (o.length == 0) throw ParseError("--length must be positive");
    OutputFile obs_out(o.out, out);
    std::optional<OutputFile> state_out;
    if (!o.states_out.empty()) state_out.emplace(o.states_out, out);

    for (std::size_t k = 0; k < o.count; ++k) {
        const std::uint64_t seed = o.seed + k;
        if (const auto* c = std::get_if<ChmmModel>(&model)) {
            const auto s = sample(*c, o.length, seed);
            *obs_out << format_multi_obs_line(s.obs) << '\n';
            if (state_out) **state_out << format_multi_obs_line(s.states) << '\n';
        } else {
            const auto s = sample(as_hmm(model), o.length, seed);
            *obs_out << format_obs_line(s.obs) << '\n';
            if (state_out) **state_out << format_obs_line(s.states) << '\n';
        }
    }
    return kExitOk;
}

int cmd_likelihood(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (const auto* c = std::get_if<ChmmModel>(&model)) {
        for (const auto& seq : multi_stream_obs(o.obs)) out << format_number(chmm_log_likelihood(*c, seq)) << '\n';
        return kExitOk;
    }
    const HmmModel hmm = as_hmm(model);
    for (const auto& seq : single_stream_obs(o.obs)) out << format_number(log_likelihood(hmm, seq)) << '\n';
    return kExitOk;
}

int cmd_filter(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (const auto* c = std::get_if<ChmmModel>(&model); c && o.particles == 0) {
        const auto seqs = multi_stream_obs(o.obs);
        for (std::size_t s = 0; s < seqs.size(); ++s) print_table(out, s, chmm_forward(*c, seqs[s]).scaled_alpha);
        return kExitOk;
    }
    const HmmModel hmm = as_hmm(model);
    std::vector<ObsSequence> seqs;
    if (const auto* c = std::get_if<ChmmModel>(&model)) {
        for (const auto& seq : multi_stream_obs(o.obs)) seqs.push_back(flatten_observations(*c, seq));
    } else {
        seqs = single_stream_obs(o.obs);
    }
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        if (o.particles > 0) {
            const ParticleFilterConfig config{o.particles, o.seed + s, o.resample_threshold};
            print_table(out, s, particle_filter(hmm, seqs[s], config).estimates);
        } else {
            print_table(out, s, filter(hmm, seqs[s]));
        }
    }
    return kExitOk;
}

int cmd_smooth(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (const auto* c = std::get_if<ChmmModel>(&model)) {
        const auto seqs = multi_stream_obs(o.obs);
        for (std::size_t s = 0; s < seqs.size(); ++s) print_table(out, s, chmm_smooth(*c, seqs[s]).joint_gamma);
        return kExitOk;
    }
    const HmmModel hmm = as_hmm(model);
    const auto seqs = single_stream_obs(o.obs);
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const auto post = smooth(hmm, seqs[s]);
        print_table(out, s, post.gamma);
        if (!o.pairwise) continue;
        for (std::size_t t = 0; t < post.xi.size(); ++t) {
            for (std::size_t i = 0; i < hmm.num_states; ++i) {
                print_row(out, "xi\t" + std::to_string(t) + '\t' + std::to_string(i), post.xi[t].row(i));
            }
        }
    }
    return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (o.horizon == 0) throw ParseError("--horizon must be at least 1");
    const HmmModel hmm = as_hmm(model);
    std::vector<ObsSequence> seqs;
    if (const auto* c = std::get_if<ChmmModel>(&model)) {
        for (const auto& seq : multi_stream_obs(o.obs)) seqs.push_back(flatten_observations(*c, seq));
    } else {
        seqs = single_stream_obs(o.obs);
    }
    for (std::size_t s = 0; s < seqs.size(); ++s) {
        const auto state = predict_state(hmm, seqs[s], o.horizon);
        out << "# sequence " << s << '\n';
        print_row(out, "state", state);
        print_row(out, "symbol", emission_mixture(hmm, state));
    }
    return kExitOk;
}

int cmd_decode(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    const HmmModel hmm = as_hmm(model);
    const auto* chmm = std::get_if<ChmmModel>(&model);

    std::vector<ObsSequence> seqs;
    if (chmm) {
        for (const auto& seq : multi_stream_obs(o.obs)) seqs.push_back(flatten_observations(*chmm, seq));
    } else {
        seqs = single_stream_obs(o.obs);
    }
    for (const auto& seq : seqs) {
        std::span<const std::size_t> view(seq);
        if (o.prefix > 0) {
            if (o.prefix > seq.size()) throw ParseError("--prefix exceeds sequence length");
            view = view.first(o.prefix);
        }
        const auto result = o.prefix > 0 ? truncated_viterbi(hmm, view) : viterbi(hmm, view);
        std::string path;
        if (chmm) {
            const MixedRadix joint(chmm->state_counts());
            MultiStatePath tuples;
            for (std::size_t s : result.path) tuples.push_back(joint.decode(s));
            path = format_multi_obs_line(tuples);
        } else {
            path = format_obs_line(result.path);
        }
        out << path << '\t' << format_number(result.log_joint_score) << '\n';
    }
    return kExitOk;
}

void print_trace(std::ostream& out, const EmTrace& trace) {
    out << "# iteration\tlog_likelihood\n";
    for (std::size_t k = 0; k < trace.log_likelihoods.size(); ++k) {
        out << k << '\t' << format_number(trace.log_likelihoods[k]) << '\n';
    }
    out << "# converged\t" << (trace.converged ? "true" : "false") << '\n';
}

EmConfig em_config(const Options& o) {
    if (o.max_iters == 0) throw ParseError("--max-iters must be positive");
    if (!(o.tol > 0.0)) throw ParseError("--tol must be positive");
    if (o.pseudocount < 0.0) throw ParseError("--pseudocount must be nonnegative");
    return {o.max_iters, o.tol, o.pseudocount};
}

int cmd_train(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    if (std::holds_alternative<ChmmModel>(model)) {
        throw ParseError(o.model + ": coupled model given to train; use train-chmm");
    }
    const auto result = baum_welch(as_hmm(model), single_stream_obs(o.obs), em_config(o));
    save_model(result.model, o.out);
    print_trace(out, result.trace);
    return kExitOk;
}

int cmd_train_chmm(const Options& o, std::ostream& out) {
    const AnyModel model = load_checked(o.model);
    const auto* chmm = std::get_if<ChmmModel>(&model);
    if (!chmm) throw ParseError(o.model + ": train-chmm needs a model of type \"chmm\"");
    const auto result = chmm_em(*chmm, multi_stream_obs(o.obs), em_config(o));
    save_model(result.model, o.out);
    print_trace(out, result.trace);
    return kExitOk;
}

int cmd_oracle_check(const Options& o, std::ostream& out) {
    const auto r = run_equivalence_suite(o.seed, o.count);
    out << "hmm_instances\t" << r.hmm_instances << '\n'
        << "chmm_instances\t" << r.chmm_instances << '\n'
        << "tied_instances\t" << r.tied_instances << '\n'
        << "path_mismatches\t" << r.path_mismatches << '\n'
        << "likelihood_dev\t" << format_number(r.likelihood_dev) << '\n'
        << "gamma_dev\t" << format_number(r.gamma_dev) << '\n'
        << "xi_dev\t" << format_number(r.xi_dev) << '\n'
        << "viterbi_score_rel_dev\t" << format_number(r.viterbi_score_rel_dev) << '\n'
        << "backward_dev\t" << format_number(r.backward_dev) << '\n'
        << "chmm_likelihood_dev\t" << format_number(r.chmm_likelihood_dev) << '\n'
        << "chmm_gamma_dev\t" << format_number(r.chmm_gamma_dev) << '\n'
        << "status\t" << (r.ok() ? "ok" : "FAIL") << '\n';
    return r.ok() ? kExitOk : kExitData;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete temporal model inference and learning", "dbn"};
    app.require_subcommand(1);
    Options o;

    auto model_opt = [&](CLI::App* sub) { sub->add_option("--model", o.model, "Model JSON file")->required(); };
    auto obs_opt = [&](CLI::App* sub) {
        sub->add_option("--obs", o.obs, "Observation file or inline sequence(s), ';'-separated")->required();
    };
    auto em_opts = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Trained model output file")->required();
        sub->add_option("--max-iters", o.max_iters, "Maximum EM iterations");
        sub->add_option("--tol", o.tol, "Relative log-likelihood tolerance");
        sub->add_option("--pseudocount", o.pseudocount, "Pseudocount added to expected counts");
    };

    auto* validate = app.add_subcommand("validate", "Check a model file");
    model_opt(validate);

    auto* sample_cmd = app.add_subcommand("sample", "Draw observation sequences from a model");
    model_opt(sample_cmd);
    sample_cmd->add_option("--length", o.length, "Sequence length")->required();
    sample_cmd->add_option("--seed", o.seed, "Seed; sequence k uses seed + k");
    sample_cmd->add_option("--count", o.count, "Number of sequences");
    sample_cmd->add_option("--out", o.out, "Observation output file (default stdout)");
    sample_cmd->add_option("--states", o.states_out, "Optional state path output file");

    auto* likelihood_cmd = app.add_subcommand("likelihood", "Natural-log likelihood per sequence");
    model_opt(likelihood_cmd);
    obs_opt(likelihood_cmd);

    auto* filter_cmd = app.add_subcommand("filter", "Filtering distributions P(x_t | y_1..t)");
    model_opt(filter_cmd);
    obs_opt(filter_cmd);
    filter_cmd->add_option("--particles", o.particles, "Use a particle filter with this many particles");
    filter_cmd->add_option("--seed", o.seed, "Particle filter seed");
    filter_cmd->add_option("--resample-threshold", o.resample_threshold, "ESS fraction triggering resampling");

    auto* smooth_cmd = app.add_subcommand("smooth", "Smoothed posteriors P(x_t | y_1..T)");
    model_opt(smooth_cmd);
    obs_opt(smooth_cmd);
    smooth_cmd->add_flag("--pairwise", o.pairwise, "Also print pairwise posteriors");

    auto* predict_cmd = app.add_subcommand("predict", "State and symbol prediction after the sequence");
    model_opt(predict_cmd);
    obs_opt(predict_cmd);
    predict_cmd->add_option("--horizon", o.horizon, "Steps ahead");

    auto* decode_cmd = app.add_subcommand("decode", "Most probable state path");
    model_opt(decode_cmd);
    obs_opt(decode_cmd);
    decode_cmd->add_option("--prefix", o.prefix, "Decode only the first N observations")
        ->check(CLI::PositiveNumber);

    auto* train_cmd = app.add_subcommand("train", "Baum-Welch training");
    model_opt(train_cmd);
    obs_opt(train_cmd);
    em_opts(train_cmd);

    auto* train_chmm_cmd = app.add_subcommand("train-chmm", "EM training for coupled HMMs");
    model_opt(train_chmm_cmd);
    obs_opt(train_chmm_cmd);
    em_opts(train_chmm_cmd);

    auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare exact algorithms against enumeration");
    oracle_cmd->add_option("--seed", o.seed, "Base seed");
    oracle_cmd->add_option("--count", o.count, "Instances per model family")->default_val(100);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(o, out);
        if (sample_cmd->parsed()) return cmd_sample(o, out);
        if (likelihood_cmd->parsed()) return cmd_likelihood(o, out);
        if (filter_cmd->parsed()) return cmd_filter(o, out);
        if (smooth_cmd->parsed()) return cmd_smooth(o, out);
        if (predict_cmd->parsed()) return cmd_predict(o, out);
        if (decode_cmd->parsed()) return cmd_decode(o, out);
        if (train_cmd->parsed()) return cmd_train(o, out);
        if (train_chmm_cmd->parsed()) return cmd_train_chmm(o, out);
        if (oracle_cmd->parsed()) return cmd_oracle_check(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace dbn
