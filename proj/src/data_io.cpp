#include "subtail/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace subtail {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

// Reads known keys from a JSON object and rejects anything else.
class Section {
public:
    Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
        if (!obj_.is_object()) throw data_error("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw data_error("config key '" + name_ + "." + key + "' has the wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.push_back(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) {
                throw data_error("unknown config key '" + name_ + "." + it.key() + "'");
            }
        }
    }

private:
    const json& obj_;
    std::string name_;
    std::vector<std::string> seen_;
};

json parse_json(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw data_error(std::string(what) + " is not valid JSON: " + e.what());
    }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw data_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw data_error("synthetic data needs at least 2 classes");
    if (dim < 1) throw data_error("synthetic dimension must be >= 1");
    if (n_max < 2) throw data_error("n_max must be >= 2");
    if (!(imbalance_ratio >= 1.0)) throw data_error("imbalance ratio must be >= 1");
    if (!(within_std >= 0.0)) throw data_error("within_std must be nonnegative");
    if (modes < 1) throw data_error("modes must be >= 1");
    if (!(overlap >= 0.0)) throw data_error("overlap must be nonnegative");
    const auto sizes = class_sizes();
    if (*std::min_element(sizes.begin(), sizes.end()) < 2) throw data_error("ratio too extreme for n_max");
}

std::vector<int> SyntheticSpec::class_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(std::max(num_classes, 0)));
    for (int c = 0; c < num_classes; ++c) {
        const double exponent = num_classes > 1 ? -static_cast<double>(c) / (num_classes - 1) : 0.0;
        sizes[static_cast<std::size_t>(c)] =
            static_cast<int>(std::lround(n_max * std::pow(imbalance_ratio, exponent)));
    }
    return sizes;
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    const json root = parse_json(json_text, "synthetic spec");
    SyntheticSpec spec;
    Section s(root, "spec");
    s.read("classes", spec.num_classes);
    s.read("dim", spec.dim);
    s.read("n_max", spec.n_max);
    s.read("imbalance_ratio", spec.imbalance_ratio);
    s.read("within_std", spec.within_std);
    s.read("modes", spec.modes);
    s.read("overlap", spec.overlap);
    s.read("seed", spec.seed);
    s.finish();
    spec.validate();
    return spec;
}

Dataset sample_synthetic(const SyntheticSpec& spec, std::span<const int> class_sizes, std::string_view stream) {
    spec.validate();
    if (class_sizes.size() != static_cast<std::size_t>(spec.num_classes)) {
        throw data_error("class size list does not match the number of classes");
    }
    const auto d = static_cast<std::size_t>(spec.dim);
    const double center_std = spec.overlap / std::sqrt(static_cast<double>(d));

    RandomSource geometry(spec.seed, "synthetic-centers");
    std::vector<Matrix> mode_centers;
    for (int c = 0; c < spec.num_classes; ++c) {
        std::vector<double> center(d);
        for (double& x : center) x = center_std * geometry.normal();
        Matrix modes(static_cast<std::size_t>(spec.modes), d);
        for (std::size_t m = 0; m < modes.rows(); ++m) {
            for (std::size_t j = 0; j < d; ++j) modes(m, j) = center[j] + 0.5 * center_std * geometry.normal();
        }
        mode_centers.push_back(std::move(modes));
    }

    RandomSource rng(spec.seed, "synthetic-" + std::string(stream));
    const std::size_t total = std::accumulate(class_sizes.begin(), class_sizes.end(), std::size_t{0});
    Matrix features(total, d);
    std::vector<int> labels;
    std::vector<std::string> ids;
    labels.reserve(total);
    ids.reserve(total);
    std::size_t row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        const auto& modes = mode_centers[static_cast<std::size_t>(c)];
        for (int i = 0; i < class_sizes[static_cast<std::size_t>(c)]; ++i, ++row) {
            auto center = modes.row(static_cast<std::size_t>(i % spec.modes));
            for (std::size_t j = 0; j < d; ++j) features(row, j) = center[j] + spec.within_std * rng.normal();
            labels.push_back(c);
            ids.push_back(std::string(stream) + "-" + std::to_string(row));
        }
    }
    return Dataset::build(std::move(features), std::move(labels), std::move(ids), spec.num_classes);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const auto sizes = spec.class_sizes();
    return sample_synthetic(spec, sizes, "s");
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string at_line(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

}  // namespace

Dataset parse_features(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw data_error(at_line(source_name, 1) + "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
        throw data_error(at_line(source_name, 1) + "header must be id,label,f0,...");
    }
    const std::size_t d = header.size() - 2;
    for (std::size_t j = 0; j < d; ++j) {
        if (header[j + 2] != "f" + std::to_string(j)) {
            throw data_error(at_line(source_name, 1) + "expected column f" + std::to_string(j));
        }
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != d + 2) {
            throw data_error(at_line(source_name, line_no) + "expected " + std::to_string(d + 2) + " fields, found " +
                             std::to_string(fields.size()));
        }
        int label = 0;
        auto lf = fields[1];
        auto [lp, lec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
        if (lec != std::errc() || lp != lf.data() + lf.size() || label < 0) {
            throw data_error(at_line(source_name, line_no) + "invalid label '" + std::string(lf) + "'");
        }
        for (std::size_t j = 0; j < d; ++j) {
            auto f = fields[j + 2];
            double v = 0.0;
            auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v)) {
                throw data_error(at_line(source_name, line_no) + "non-numeric feature f" + std::to_string(j) + " '" +
                                 std::string(f) + "'");
            }
            values.push_back(v);
        }
        ids.emplace_back(fields[0]);
        labels.push_back(label);
    }
    if (labels.empty()) throw data_error(source_name + ": no samples");
    const std::size_t n = labels.size();
    return Dataset::build(Matrix(n, d, std::move(values)), std::move(labels), std::move(ids));
}

Dataset load_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    return parse_features(in, path.string());
}

void write_features(std::ostream& out, const Dataset& ds) {
    out << "id,label";
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.ids[i] << ',' << ds.labels[i];
        for (double v : ds.features.row(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

void save_features(const std::filesystem::path& path, const Dataset& ds) {
    std::ostringstream ss;
    write_features(ss, ds);
    write_text_file(path, ss.str());
}

// ---------------------------------------------------------------------------

void SplitSpec::validate() const {
    if (!(train > 0.0 && valid > 0.0 && test > 0.0)) throw data_error("split fractions must be positive");
    if (std::abs(train + valid + test - 1.0) > 1e-9) throw data_error("split fractions must sum to 1");
}

SplitIndices make_split(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    RandomSource rng(spec.seed, "split");
    SplitIndices out;
    auto take = [](double fraction, std::size_t n) {
        return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
    };

    if (spec.mode == SplitMode::random) {
        std::vector<std::size_t> order(ds.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const std::size_t n_test = take(spec.test, order.size());
        const std::size_t n_valid = take(spec.valid, order.size());
        out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                         order.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
        out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), order.end());
    } else {
        const int n_min = *std::min_element(ds.class_counts.begin(), ds.class_counts.end());
        const std::size_t per_test = take(spec.test, static_cast<std::size_t>(n_min));
        const std::size_t per_valid = take(spec.valid, static_cast<std::size_t>(n_min));
        if (per_test == 0 || per_valid == 0) {
            throw data_error("standard split: smallest class (" + std::to_string(n_min) +
                             ") too small for the requested fractions");
        }
        std::vector<std::vector<std::size_t>> by_class(ds.class_counts.size());
        for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
        for (auto& members : by_class) {
            rng.shuffle(members);
            for (std::size_t k = 0; k < members.size(); ++k) {
                if (k < per_test) {
                    out.test.push_back(members[k]);
                } else if (k < per_test + per_valid) {
                    out.valid.push_back(members[k]);
                } else {
                    out.train.push_back(members[k]);
                }
            }
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

// ---------------------------------------------------------------------------

RunConfig parse_run_config(std::string_view text) {
    const json root = parse_json(text, "config");
    RunConfig cfg;
    cfg.source = std::string(text);
    auto& t = cfg.train;

    Section top(root, "config");
    std::uint64_t seed = 0;
    top.read("seed", seed);
    t.seed = seed;
    cfg.split.seed = seed;

    if (const json* j = top.child("train")) {
        Section s(*j, "train");
        std::string mode(to_string(t.reweight_mode));
        s.read("warmup_epochs", t.warmup_epochs);
        s.read("update_interval", t.update_interval);
        s.read("epochs", t.epochs);
        s.read("batch_size", t.batch_size);
        s.read("encoder_lr", t.encoder_lr);
        s.read("classifier_lr", t.classifier_lr);
        s.read("reweight_mode", mode);
        s.read("dynamic", t.dynamic);
        s.finish();
        t.reweight_mode = parse_reweight_mode(mode);
    }
    if (const json* j = top.child("model")) {
        Section s(*j, "model");
        s.read("hidden", t.hidden_dim);
        s.read("embedding", t.embedding_dim);
        s.finish();
    }
    if (const json* j = top.child("cluster")) {
        Section s(*j, "cluster");
        s.read("delta", t.cluster.delta);
        s.read("iterations", t.cluster.iterations);
        s.read("seed", t.cluster.seed);
        s.finish();
    }
    if (const json* j = top.child("contrastive")) {
        Section s(*j, "contrastive");
        s.read("tau", t.contrastive.tau);
        s.read("tau1", t.contrastive.tau1);
        s.read("tau2", t.contrastive.tau2);
        s.read("beta", t.contrastive.beta);
        s.finish();
    }
    if (const json* j = top.child("augment")) {
        Section s(*j, "augment");
        s.read("sigma", t.augment_sigma);
        s.read("dropout", t.augment_dropout);
        s.finish();
    }
    if (const json* j = top.child("split")) {
        Section s(*j, "split");
        std::string mode = cfg.split.mode == SplitMode::random ? "random" : "standard";
        s.read("mode", mode);
        s.read("train", cfg.split.train);
        s.read("valid", cfg.split.valid);
        s.read("test", cfg.split.test);
        s.read("seed", cfg.split.seed);
        s.finish();
        if (mode == "random") {
            cfg.split.mode = SplitMode::random;
        } else if (mode == "standard") {
            cfg.split.mode = SplitMode::standard;
        } else {
            throw data_error("unknown split mode '" + mode + "'");
        }
    }
    top.finish();
    t.validate();
    cfg.split.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_text_file(path)); }

// ---------------------------------------------------------------------------

namespace {

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw data_error("ragged matrix in report");
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

json resolved_json(const RunConfig& cfg) {
    const auto& t = cfg.train;
    return json{
        {"seed", t.seed},
        {"train",
         {{"warmup_epochs", t.warmup_epochs},
          {"update_interval", t.update_interval},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"encoder_lr", t.encoder_lr},
          {"classifier_lr", t.classifier_lr},
          {"reweight_mode", std::string(to_string(t.reweight_mode))},
          {"dynamic", t.dynamic}}},
        {"model", {{"hidden", t.hidden_dim}, {"embedding", t.embedding_dim}}},
        {"cluster", {{"delta", t.cluster.delta}, {"iterations", t.cluster.iterations}, {"seed", t.cluster.seed}}},
        {"contrastive",
         {{"tau", t.contrastive.tau}, {"tau1", t.contrastive.tau1}, {"tau2", t.contrastive.tau2},
          {"beta", t.contrastive.beta}}},
        {"augment", {{"sigma", t.augment_sigma}, {"dropout", t.augment_dropout}}},
        {"split",
         {{"mode", cfg.split.mode == SplitMode::random ? "random" : "standard"},
          {"train", cfg.split.train},
          {"valid", cfg.split.valid},
          {"test", cfg.split.test},
          {"seed", cfg.split.seed}}},
    };
}

json eval_json(const EvalReport& r) {
    const int k = r.confusion.num_classes();
    json cm = json::array();
    for (int i = 0; i < k; ++i) {
        std::vector<std::int64_t> row;
        for (int j = 0; j < k; ++j) row.push_back(r.confusion(i, j));
        cm.push_back(row);
    }
    return json{{"balanced_accuracy", r.balanced_accuracy},
                {"balanced_f1", r.balanced_f1},
                {"recall", r.recall},
                {"balanced_precision", r.balanced_precision},
                {"confusion", cm}};
}

EvalReport eval_from_json(const json& j) {
    EvalReport r;
    const auto rows = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
    std::vector<std::int64_t> flat;
    for (const auto& row : rows) {
        if (row.size() != rows.size()) throw data_error("confusion matrix in report is not square");
        flat.insert(flat.end(), row.begin(), row.end());
    }
    r.confusion = ConfusionMatrix(static_cast<int>(rows.size()), std::move(flat));
    r.balanced_accuracy = j.at("balanced_accuracy").get<double>();
    r.balanced_f1 = j.at("balanced_f1").get<double>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.balanced_precision = j.at("balanced_precision").get<std::vector<double>>();
    return r;
}

}  // namespace

bool operator==(const RunReport& a, const RunReport& b) {
    return a.config.source == b.config.source && a.epochs == b.epochs && a.metrics == b.metrics &&
           a.weights == b.weights;
}

std::string eval_to_json(const EvalReport& eval) { return eval_json(eval).dump(2) + "\n"; }

std::string report_to_json(const RunReport& report) {
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"warmup", e.warmup},
                          {"reclustered", e.reclustered},
                          {"contrastive_loss", e.contrastive_loss},
                          {"classification_loss", e.classification_loss},
                          {"weights", e.weights},
                          {"cluster_counts", e.cluster_counts}});
    }
    json metrics = json::object();
    for (const auto& [name, r] : report.metrics) metrics[name] = eval_json(r);
    json weights = json::array();
    for (const auto& s : report.weights) {
        const auto& d = s.report;
        weights.push_back({{"epoch", s.epoch},
                           {"class_centroids", matrix_json(d.class_centroids)},
                           {"pairwise", matrix_json(d.pairwise)},
                           {"class_min", d.class_min},
                           {"sub_min", d.sub_min},
                           {"w_class", d.w_class},
                           {"w_sub", d.w_sub},
                           {"w_final", d.w_final}});
    }
    json root{{"config", {{"source", report.config.source}, {"resolved", resolved_json(report.config)}}},
              {"epochs", epochs},
              {"metrics", metrics},
              {"weights", weights}};
    return root.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
    const json root = parse_json(text, "report");
    try {
        RunReport r;
        r.config = parse_run_config(root.at("config").at("source").get<std::string>());
        for (const auto& e : root.at("epochs")) {
            EpochRecord rec;
            rec.epoch = e.at("epoch").get<int>();
            rec.warmup = e.at("warmup").get<bool>();
            rec.reclustered = e.at("reclustered").get<bool>();
            rec.contrastive_loss = e.at("contrastive_loss").get<double>();
            rec.classification_loss = e.at("classification_loss").get<double>();
            rec.weights = e.at("weights").get<std::vector<double>>();
            rec.cluster_counts = e.at("cluster_counts").get<std::vector<int>>();
            r.epochs.push_back(std::move(rec));
        }
        for (const auto& [name, m] : root.at("metrics").items()) r.metrics[name] = eval_from_json(m);
        for (const auto& w : root.at("weights")) {
            WeightSnapshot s;
            s.epoch = w.at("epoch").get<int>();
            s.report.class_centroids = matrix_from_json(w.at("class_centroids"));
            s.report.pairwise = matrix_from_json(w.at("pairwise"));
            s.report.class_min = w.at("class_min").get<std::vector<double>>();
            s.report.sub_min = w.at("sub_min").get<std::vector<double>>();
            s.report.w_class = w.at("w_class").get<std::vector<double>>();
            s.report.w_sub = w.at("w_sub").get<std::vector<double>>();
            s.report.w_final = w.at("w_final").get<std::vector<double>>();
            r.weights.push_back(std::move(s));
        }
        return r;
    } catch (const json::exception& e) {
        throw data_error(std::string("malformed report: ") + e.what());
    }
}

std::string report_to_csv(const RunReport& report) {
    std::ostringstream out;
    out << "section,key,field,value\n";
    auto put = [&](std::string_view section, const std::string& key, const std::string& field, double v) {
        out << section << ',' << key << ',' << field << ',' << format_double(v) << '\n';
    };
    for (const auto& e : report.epochs) {
        const auto key = std::to_string(e.epoch);
        put("epoch", key, "contrastive_loss", e.contrastive_loss);
        put("epoch", key, "classification_loss", e.classification_loss);
        put("epoch", key, "reclustered", e.reclustered ? 1.0 : 0.0);
        for (std::size_t c = 0; c < e.weights.size(); ++c) put("epoch", key, "w" + std::to_string(c), e.weights[c]);
    }
    for (const auto& [name, m] : report.metrics) {
        put("metric", name, "balanced_accuracy", m.balanced_accuracy);
        put("metric", name, "balanced_f1", m.balanced_f1);
        for (std::size_t c = 0; c < m.recall.size(); ++c) {
            put("metric", name, "recall" + std::to_string(c), m.recall[c]);
            put("metric", name, "balanced_precision" + std::to_string(c), m.balanced_precision[c]);
        }
    }
    for (const auto& s : report.weights) {
        const auto key = std::to_string(s.epoch);
        for (std::size_t c = 0; c < s.report.w_final.size(); ++c) {
            put("weights", key, "class_min" + std::to_string(c), s.report.class_min[c]);
            put("weights", key, "sub_min" + std::to_string(c), s.report.sub_min[c]);
            put("weights", key, "w_class" + std::to_string(c), s.report.w_class[c]);
            put("weights", key, "w_sub" + std::to_string(c), s.report.w_sub[c]);
            put("weights", key, "w_final" + std::to_string(c), s.report.w_final[c]);
        }
    }
    return out.str();
}

void save_report(const std::filesystem::path& path, const RunReport& report) {
    write_text_file(path, report_to_json(report));
}

RunReport load_report(const std::filesystem::path& path) { return report_from_json(read_text_file(path)); }

// ---------------------------------------------------------------------------

namespace {

constexpr unsigned char kMagic[4] = {'S', 'U', 'B', 'T'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>(v >> s));
}

void put_f64(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<unsigned char>(bits >> s));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << s;
        return v;
    }

    void f64(std::span<double> out) {
        need(8 * out.size());
        for (double& x : out) {
            std::uint64_t bits = 0;
            for (int s = 0; s < 64; s += 8) bits |= static_cast<std::uint64_t>(bytes_[pos_++]) << s;
            x = std::bit_cast<double>(bits);
        }
    }

    bool at_end() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw data_error("checkpoint truncated");
    }

    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> checkpoint_bytes(const TrainedModel& model) {
    std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(model.encoder.input_dim()));
    put_u32(out, static_cast<std::uint32_t>(model.encoder.hidden_dim()));
    put_u32(out, static_cast<std::uint32_t>(model.encoder.embedding_dim()));
    put_u32(out, static_cast<std::uint32_t>(model.classifier.w.rows()));
    for (const auto& block : model.encoder.blocks()) {
        for (double v : block) put_f64(out, v);
    }
    for (const auto& block : model.classifier.blocks()) {
        for (double v : block) put_f64(out, v);
    }
    return out;
}

TrainedModel checkpoint_from_bytes(std::span<const unsigned char> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw data_error("not a checkpoint (bad magic)");
    }
    ByteReader reader(bytes.subspan(4));
    const auto version = reader.u32();
    if (version != kCheckpointVersion) {
        throw data_error("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                         std::to_string(kCheckpointVersion) + ")");
    }
    const std::size_t d = reader.u32();
    const std::size_t h = reader.u32();
    const std::size_t e = reader.u32();
    const std::size_t k = reader.u32();
    if (d == 0 || h == 0 || e == 0 || k == 0 || d > (1u << 24) || h > (1u << 24) || e > (1u << 24) || k > (1u << 24)) {
        throw data_error("checkpoint has invalid dimensions");
    }
    TrainedModel m{EncoderParams::zeros(d, h, e), ClassifierParams::zeros(e, k)};
    for (auto block : m.encoder.blocks()) reader.f64(block);
    for (auto block : m.classifier.blocks()) reader.f64(block);
    if (!reader.at_end()) throw data_error("checkpoint has trailing bytes");
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
    const auto bytes = checkpoint_bytes(model);
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    return checkpoint_from_bytes(
        std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace subtail
