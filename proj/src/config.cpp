#include "tzsl/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tzsl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& value) {
    std::string v = value;
    for (char& ch : v)
        if (ch == ',') ch = ' ';
    std::istringstream in(v);
    std::vector<double> out;
    double x;
    while (in >> x) out.push_back(x);
    return out;
}

std::string format_list(const std::vector<double>& values) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ",";
        out << values[i];
    }
    return out.str();
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

DataSource parse_source(const std::string& v) {
    if (v == "synthetic") return DataSource::Synthetic;
    if (v == "file") return DataSource::File;
    if (v == "csv") return DataSource::Csv;
    throw std::invalid_argument("config: data.source must be synthetic, file or csv");
}

PriorKind parse_prior(const std::string& v) {
    if (v == "gt") return PriorKind::GroundTruth;
    if (v == "uniform") return PriorKind::Uniform;
    if (v == "cpe") return PriorKind::Cpe;
    throw std::invalid_argument("config: prior must be gt, uniform or cpe");
}

}  // namespace

std::string to_string(PriorKind kind) {
    switch (kind) {
        case PriorKind::GroundTruth: return "gt";
        case PriorKind::Uniform: return "uniform";
        case PriorKind::Cpe: return "cpe";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (lambda_r < 0 || lambda_u1 < 0 || lambda_u2 < 0 || lambda_gp < 0)
        throw std::invalid_argument("config: loss weights must be >= 0");
    if (n_pre < 1 || n_r < 1 || n_g < 1)
        throw std::invalid_argument("config: stage epochs must be >= 1");
    if (batch < 1 || hidden < 1) throw std::invalid_argument("config: batch and hidden >= 1");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw std::invalid_argument("config: holdout_fraction must be in (0, 1)");
    if (source == DataSource::File && data_path.empty())
        throw std::invalid_argument("config: data.source=file requires data.path");
    if (source == DataSource::Csv &&
        (csv_seen.empty() || csv_unseen.empty() || csv_semantics.empty()))
        throw std::invalid_argument("config: data.source=csv requires all three csv paths");
    synthetic_spec().validate();
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
    SyntheticSpec spec;
    spec.d_x = synth_d_x;
    spec.d_a = synth_d_a;
    spec.d_z = synth_d_z;
    spec.n_seen_classes = synth_seen_classes;
    spec.n_unseen_classes = synth_unseen_classes;
    spec.samples_per_class = synth_samples_per_class;
    spec.semantic_map_scale = synth_map_scale;
    spec.noise_std = synth_noise_std;
    if (!synth_unseen_prior.empty()) spec.unseen_prior.p = synth_unseen_prior;
    spec.seed = synth_seed;
    return spec;
}

AdamWConfig ExperimentConfig::adamw_config() const {
    AdamWConfig opt;
    opt.lr = opt_lr;
    opt.beta1 = opt_beta1;
    opt.beta2 = opt_beta2;
    opt.weight_decay = opt_weight_decay;
    return opt;
}

VerTrainConfig ExperimentConfig::ver_config() const {
    VerTrainConfig cfg;
    cfg.d_z = synth_d_z;
    cfg.hidden = hidden;
    cfg.epochs = n_pre;
    cfg.batch = batch;
    cfg.slope = slope;
    cfg.opt = adamw_config();
    return cfg;
}

RegressTrainConfig ExperimentConfig::regress_config() const {
    RegressTrainConfig cfg;
    cfg.hidden = hidden;
    cfg.epochs = n_r;
    cfg.batch = batch;
    cfg.lambda_r = lambda_r;
    cfg.lambda_gp = lambda_gp;
    cfg.slope = slope;
    cfg.critic_enabled = lambda_r != 0.0;
    cfg.opt = adamw_config();
    return cfg;
}

GenTrainConfig ExperimentConfig::gen_config() const {
    GenTrainConfig cfg;
    cfg.d_z = synth_d_z;
    cfg.hidden = hidden;
    cfg.epochs = n_g;
    cfg.batch = batch;
    cfg.lambda_u1 = lambda_u1;
    cfg.lambda_u2 = lambda_u2;
    cfg.lambda_gp = lambda_gp;
    cfg.slope = slope;
    cfg.opt = adamw_config();
    return cfg;
}

FzslConfig ExperimentConfig::fzsl_config() const {
    FzslConfig cfg;
    cfg.n_syn = n_syn;
    cfg.epochs = clf_epochs;
    cfg.batch = 128;
    cfg.mode = mode;
    cfg.opt = AdamWConfig{};
    return cfg;
}

namespace {

struct KeyHandlers {
    std::map<std::string, std::function<void(ExperimentConfig&, const std::string&)>> set;
    std::map<std::string, std::function<std::string(const ExperimentConfig&)>> get;

    void add(const std::string& key,
             std::function<void(ExperimentConfig&, const std::string&)> setter,
             std::function<std::string(const ExperimentConfig&)> getter) {
        set[key] = std::move(setter);
        get[key] = std::move(getter);
    }
};

const KeyHandlers& handlers() {
    static const KeyHandlers h = [] {
        KeyHandlers h;
        const auto u64 = [](std::uint64_t ExperimentConfig::* field) {
            return std::pair(
                [field](ExperimentConfig& c, const std::string& v) { c.*field = std::stoull(v); },
                [field](const ExperimentConfig& c) { return std::to_string(c.*field); });
        };
        const auto size = [](std::size_t ExperimentConfig::* field) {
            return std::pair(
                [field](ExperimentConfig& c, const std::string& v) { c.*field = std::stoull(v); },
                [field](const ExperimentConfig& c) { return std::to_string(c.*field); });
        };
        const auto real = [](double ExperimentConfig::* field) {
            return std::pair(
                [field](ExperimentConfig& c, const std::string& v) { c.*field = std::stod(v); },
                [field](const ExperimentConfig& c) { return format_double(c.*field); });
        };
        const auto text = [](std::string ExperimentConfig::* field) {
            return std::pair(
                [field](ExperimentConfig& c, const std::string& v) { c.*field = v; },
                [field](const ExperimentConfig& c) { return c.*field; });
        };
        const auto prior = [](PriorKind ExperimentConfig::* field) {
            return std::pair(
                [field](ExperimentConfig& c, const std::string& v) { c.*field = parse_prior(v); },
                [field](const ExperimentConfig& c) { return to_string(c.*field); });
        };

        const auto add = [&h](const std::string& key, auto pair) {
            h.add(key, pair.first, pair.second);
        };

        h.add("data.source",
              [](ExperimentConfig& c, const std::string& v) { c.source = parse_source(v); },
              [](const ExperimentConfig& c) {
                  switch (c.source) {
                      case DataSource::Synthetic: return std::string("synthetic");
                      case DataSource::File: return std::string("file");
                      case DataSource::Csv: return std::string("csv");
                  }
                  return std::string("?");
              });
        add("data.path", text(&ExperimentConfig::data_path));
        add("data.csv_seen", text(&ExperimentConfig::csv_seen));
        add("data.csv_unseen", text(&ExperimentConfig::csv_unseen));
        add("data.csv_semantics", text(&ExperimentConfig::csv_semantics));
        add("data.holdout_fraction", real(&ExperimentConfig::holdout_fraction));

        add("synth.d_x", size(&ExperimentConfig::synth_d_x));
        add("synth.d_a", size(&ExperimentConfig::synth_d_a));
        add("synth.d_z", size(&ExperimentConfig::synth_d_z));
        add("synth.seen_classes", size(&ExperimentConfig::synth_seen_classes));
        add("synth.unseen_classes", size(&ExperimentConfig::synth_unseen_classes));
        add("synth.samples_per_class", size(&ExperimentConfig::synth_samples_per_class));
        add("synth.map_scale", real(&ExperimentConfig::synth_map_scale));
        add("synth.noise_std", real(&ExperimentConfig::synth_noise_std));
        h.add("synth.unseen_prior",
              [](ExperimentConfig& c, const std::string& v) {
                  c.synth_unseen_prior = v == "uniform" ? std::vector<double>{} : parse_list(v);
              },
              [](const ExperimentConfig& c) {
                  return c.synth_unseen_prior.empty() ? std::string("uniform")
                                                      : format_list(c.synth_unseen_prior);
              });
        add("synth.seed", u64(&ExperimentConfig::synth_seed));

        add("hidden", size(&ExperimentConfig::hidden));
        add("batch", size(&ExperimentConfig::batch));
        add("slope", real(&ExperimentConfig::slope));
        add("n_pre", size(&ExperimentConfig::n_pre));
        add("n_r", size(&ExperimentConfig::n_r));
        add("n_g", size(&ExperimentConfig::n_g));
        add("lambda_r", real(&ExperimentConfig::lambda_r));
        add("lambda_u1", real(&ExperimentConfig::lambda_u1));
        add("lambda_u2", real(&ExperimentConfig::lambda_u2));
        add("lambda_gp", real(&ExperimentConfig::lambda_gp));
        add("opt.lr", real(&ExperimentConfig::opt_lr));
        add("opt.beta1", real(&ExperimentConfig::opt_beta1));
        add("opt.beta2", real(&ExperimentConfig::opt_beta2));
        add("opt.weight_decay", real(&ExperimentConfig::opt_weight_decay));

        add("prior.g", prior(&ExperimentConfig::prior_g));
        add("prior.d", prior(&ExperimentConfig::prior_d));
        add("prior.regressor", prior(&ExperimentConfig::prior_regressor));
        h.add("cpe.source",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "generator")
                      c.cpe_source = CpeAnchorSource::Generator;
                  else if (v == "regression")
                      c.cpe_source = CpeAnchorSource::Regression;
                  else
                      throw std::invalid_argument(
                          "config: cpe.source must be generator or regression");
              },
              [](const ExperimentConfig& c) {
                  return c.cpe_source == CpeAnchorSource::Generator ? std::string("generator")
                                                                    : std::string("regression");
              });
        add("cpe.iters", size(&ExperimentConfig::cpe_iters));
        add("cpe.samples_per_class", size(&ExperimentConfig::cpe_samples_per_class));
        add("cpe.bootstrap_epochs", size(&ExperimentConfig::cpe_bootstrap_epochs));

        add("n_syn", size(&ExperimentConfig::n_syn));
        add("clf_epochs", size(&ExperimentConfig::clf_epochs));
        h.add("mode",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "tzsl")
                      c.mode = EvalMode::TZSL;
                  else if (v == "tgzsl")
                      c.mode = EvalMode::TGZSL;
                  else
                      throw std::invalid_argument("config: mode must be tzsl or tgzsl");
              },
              [](const ExperimentConfig& c) {
                  return c.mode == EvalMode::TZSL ? std::string("tzsl") : std::string("tgzsl");
              });

        add("ape.fit_samples", size(&ExperimentConfig::ape_fit_samples));
        add("ape.mc_budget", size(&ExperimentConfig::ape_mc_budget));
        h.add("sweep.kind",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "priors")
                      c.sweep_kind = SweepKind::Priors;
                  else if (v == "lambda_u2")
                      c.sweep_kind = SweepKind::LambdaU2;
                  else
                      throw std::invalid_argument("config: sweep.kind must be priors or lambda_u2");
              },
              [](const ExperimentConfig& c) {
                  return c.sweep_kind == SweepKind::Priors ? std::string("priors")
                                                           : std::string("lambda_u2");
              });
        h.add("sweep.lambda_values",
              [](ExperimentConfig& c, const std::string& v) { c.sweep_lambda_values = parse_list(v); },
              [](const ExperimentConfig& c) { return format_list(c.sweep_lambda_values); });

        add("seed", u64(&ExperimentConfig::seed));
        add("out", text(&ExperimentConfig::out_dir));
        return h;
    }();
    return h;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << "config line " << line_no << ": expected key=value, got \"" << line << "\"";
            throw std::invalid_argument(msg.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = handlers().set.find(key);
        if (it == handlers().set.end())
            throw std::invalid_argument("config: unknown key \"" + key + "\"");
        try {
            it->second(cfg, value);
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad value for key \"" + key + "\": " + value);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    for (const auto& [key, getter] : handlers().get) out << key << " = " << getter(cfg) << "\n";
    return out.str();
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
    // The output directory does not identify the experiment; leave it out so
    // the same run lands on the same fingerprint wherever it is written.
    std::ostringstream text;
    for (const auto& [key, getter] : handlers().get)
        if (key != "out") text << key << " = " << getter(cfg) << "\n";
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text.str()) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace tzsl
