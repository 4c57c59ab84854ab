#include "easynet/config.hpp"

#include "easynet/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace easynet {

namespace {

using Getter = std::function<std::string()>;
using Setter = std::function<void(const std::string&)>;

struct Field {
    std::string section;
    std::string key;
    Getter get;
    Setter set;
};

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return out.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
}

template <class T>
T parse_number(const std::string& s) {
    T v{};
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc{} || ptr != end) throw ConfigError("bad numeric value '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("bad boolean value '" + s + "'");
}

Field number(const std::string& sec, const std::string& key, double& v) {
    return {sec, key, [&v] { return fmt(v); }, [&v](const std::string& s) { v = parse_number<double>(s); }};
}
Field integer(const std::string& sec, const std::string& key, int& v) {
    return {sec, key, [&v] { return std::to_string(v); }, [&v](const std::string& s) { v = parse_number<int>(s); }};
}
Field seed(const std::string& sec, const std::string& key, std::uint64_t& v) {
    return {sec, key, [&v] { return std::to_string(v); },
            [&v](const std::string& s) { v = parse_number<std::uint64_t>(s); }};
}
Field boolean(const std::string& sec, const std::string& key, bool& v) {
    return {sec, key, [&v] { return std::string(v ? "true" : "false"); },
            [&v](const std::string& s) { v = parse_bool(s); }};
}
Field path(const std::string& sec, const std::string& key, std::filesystem::path& v) {
    return {sec, key, [&v] { return v.string(); }, [&v](const std::string& s) { v = s; }};
}
Field list(const std::string& sec, const std::string& key, std::vector<std::string>& v) {
    return {sec, key, [&v] { return join(v); }, [&v](const std::string& s) { v = split_list(s); }};
}

std::vector<Field> fields(PipelineConfig& c) {
    std::vector<Field> f;
    auto& a = c.augment;
    f.push_back(integer("augment", "scale_exp_min", a.scale_exp_min));
    f.push_back(integer("augment", "scale_exp_max", a.scale_exp_max));
    f.push_back(number("augment", "binarize_threshold", a.binarize_threshold));
    f.push_back(number("augment", "blend_beta_min", a.blend_beta_min));
    f.push_back(number("augment", "blend_beta_max", a.blend_beta_max));
    f.push_back(number("augment", "depth_offset_fraction", a.depth_offset_fraction));
    f.push_back(number("augment", "anomalous_fraction", a.anomalous_fraction));
    f.push_back(boolean("augment", "random_rotation", a.random_rotation));

    auto& l = c.loss;
    f.push_back(number("loss", "lambda1", l.lambda1));
    f.push_back(number("loss", "lambda2", l.lambda2));
    f.push_back(number("loss", "lambda3", l.lambda3));
    f.push_back(number("loss", "lambda4", l.lambda4));
    f.push_back(number("loss", "focal_alpha_anomaly", l.focal_alpha_anomaly));
    f.push_back(number("loss", "focal_alpha_normal", l.focal_alpha_normal));
    f.push_back(number("loss", "focal_gamma", l.focal_gamma));
    f.push_back(number("loss", "focal_epsilon", l.focal_epsilon));
    f.push_back(integer("loss", "ssim_window", l.ssim_window));
    f.push_back(number("loss", "ssim_sigma", l.ssim_sigma));
    f.push_back(number("loss", "ssim_c1", l.ssim_c1));
    f.push_back(number("loss", "ssim_c2", l.ssim_c2));

    auto& m = c.model;
    f.push_back(integer("mrn", "input_size", m.mrn.input_size));
    f.push_back(integer("mrn", "levels", m.mrn.levels));
    f.push_back(integer("mrn", "base_width", m.mrn.base_width));
    f.push_back(integer("mrn", "tap_layers", m.mrn.tap_layers));
    f.push_back(seed("mrn", "seed", m.mrn.seed));
    f.push_back(integer("msn", "hidden_width", m.msn.hidden_width));
    f.push_back(seed("msn", "seed", m.msn.seed));

    auto& g = c.gate;
    f.push_back(number("gate", "alpha", g.alpha));
    f.push_back(integer("gate", "reduction", g.reduction));
    f.push_back({"gate", "entropy_mode",
                 [&g] { return std::string(g.entropy_mode == EntropyMode::normalized ? "normalized" : "raw"); },
                 [&g](const std::string& s) {
                     if (s == "normalized") g.entropy_mode = EntropyMode::normalized;
                     else if (s == "raw") g.entropy_mode = EntropyMode::raw;
                     else throw ConfigError("gate.entropy_mode must be normalized or raw, got '" + s + "'");
                 }});

    auto& t = c.train;
    f.push_back(integer("train", "steps", t.steps));
    f.push_back(integer("train", "batch_size", t.batch_size));
    f.push_back(number("train", "lr", t.lr));
    f.push_back({"train", "lr_milestones",
                 [&t] {
                     std::vector<std::string> v;
                     for (double x : t.lr_milestones) v.push_back(fmt(x));
                     return join(v);
                 },
                 [&t](const std::string& s) {
                     t.lr_milestones.clear();
                     for (const auto& item : split_list(s)) t.lr_milestones.push_back(parse_number<double>(item));
                 }});
    f.push_back(number("train", "lr_factor", t.lr_factor));
    f.push_back(seed("train", "seed", t.seed));
    f.push_back(number("train", "checkpoint_fraction", t.checkpoint_fraction));
    f.push_back(integer("train", "texture_count", t.texture_count));
    f.push_back(path("train", "texture_dir", t.texture_dir));

    auto& d = c.data;
    f.push_back(path("data", "root", d.root));
    f.push_back(integer("data", "input_size", d.input_size));
    f.push_back(number("data", "ransac_threshold", d.ransac.threshold));
    f.push_back(integer("data", "ransac_iterations", d.ransac.iterations));
    f.push_back(seed("data", "ransac_seed", d.ransac.seed));
    f.push_back(number("data", "foreground_floor", d.foreground_floor));

    auto& e = c.eval;
    f.push_back({"eval", "gate_mode", [&e] { return std::string(to_string(e.gate_mode)); },
                 [&e](const std::string& s) { e.gate_mode = parse_gate_mode(s); }});
    f.push_back({"eval", "score",
                 [&e] {
                     switch (e.score.reduction) {
                     case ScoreReduction::max: return std::string("max");
                     case ScoreReduction::topk_mean: return std::string("topk_mean");
                     default: return std::string("smoothed_max");
                     }
                 },
                 [&e](const std::string& s) {
                     if (s == "smoothed_max") e.score.reduction = ScoreReduction::smoothed_max;
                     else if (s == "max") e.score.reduction = ScoreReduction::max;
                     else if (s == "topk_mean") e.score.reduction = ScoreReduction::topk_mean;
                     else throw ConfigError("eval.score must be smoothed_max, max or topk_mean, got '" + s + "'");
                 }});
    f.push_back(integer("eval", "smooth_kernel", e.score.smooth_kernel));
    f.push_back(number("eval", "topk_fraction", e.score.topk_fraction));
    f.push_back(number("eval", "fpr_limit", e.fpr_limit));
    f.push_back(list("eval", "defects", e.defects));

    f.push_back(integer("bench", "warmup", c.bench.warmup));
    f.push_back(integer("bench", "timed", c.bench.timed));

    auto& s = c.synthetic;
    f.push_back(list("synthetic", "categories", s.categories));
    f.push_back(integer("synthetic", "train_count", s.train_count));
    f.push_back(integer("synthetic", "test_count", s.test_count));
    f.push_back(integer("synthetic", "size", s.size));
    f.push_back(seed("synthetic", "seed", s.seed));
    return f;
}

} // namespace

void PipelineConfig::validate() const {
    augment.validate();
    loss.validate();
    model.validate();
    gate.validate();
    train.validate();
    data.validate();
    eval.validate();
    if (bench.timed < 10 || bench.warmup < 0) throw ConfigError("bench: need timed >= 10 and warmup >= 0");
    if (model.mrn.input_size != data.input_size) {
        throw ConfigError("mrn.input_size (" + std::to_string(model.mrn.input_size) + ") differs from data.input_size (" +
                          std::to_string(data.input_size) + ")");
    }
    if (model.se_reduction != gate.reduction) throw ConfigError("model se_reduction differs from gate.reduction");
}

PipelineConfig desk_scale_defaults() {
    PipelineConfig c;
    c.model.mrn.input_size = 64;
    c.model.mrn.levels = 4;
    c.model.mrn.base_width = 16;
    c.model.msn.hidden_width = 32;
    c.model.se_reduction = 4;
    c.gate.reduction = 4;
    c.data.input_size = 64;
    return c;
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    PipelineConfig c = base;
    auto table = fields(c);
    bool mrn_size = false;
    bool data_size = false;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("config: key '" + section + "' is outside any section");
        }
        for (const auto& [key, value] : body) {
            auto it = std::find_if(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == table.end()) throw ConfigError("config: unknown key " + section + "." + key);
            try {
                it->set(trim(value.data()));
            } catch (const ConfigError& e) {
                throw ConfigError("config: " + section + "." + key + ": " + e.what());
            }
            mrn_size = mrn_size || (section == "mrn" && key == "input_size");
            data_size = data_size || (section == "data" && key == "input_size");
        }
    }
    if (data_size && !mrn_size) c.model.mrn.input_size = c.data.input_size;
    if (mrn_size && !data_size) c.data.input_size = c.model.mrn.input_size;
    c.model.se_reduction = c.gate.reduction;
    return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in, std::move(base));
}

void write_config(const PipelineConfig& cfg, std::ostream& out) {
    PipelineConfig copy = cfg;
    std::string section;
    for (const Field& f : fields(copy)) {
        if (f.section != section) {
            out << (section.empty() ? "" : "\n") << '[' << f.section << "]\n";
            section = f.section;
        }
        out << f.key << " = " << f.get() << '\n';
    }
}

} // namespace easynet
