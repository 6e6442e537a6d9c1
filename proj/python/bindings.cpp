#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "subtail/data_io.hpp"

namespace py = pybind11;
using namespace subtail;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntArray = py::array_t<int, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const DoubleArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

std::vector<int> to_ints(const IntArray& a) {
    if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
    return std::vector<int>(a.data(), a.data() + a.shape(0));
}

DoubleArray to_array(const Matrix& m) {
    DoubleArray out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

py::array_t<int> to_array(const std::vector<int>& v) {
    py::array_t<int> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Dataset to_dataset(const DoubleArray& x, const IntArray& y, int num_classes) {
    return Dataset::build(to_matrix(x), to_ints(y), {}, num_classes);
}

py::tuple loss_tuple(const ContrastiveLoss& l) {
    return py::make_tuple(l.value, to_array(l.grad_anchors), to_array(l.grad_augmented));
}

py::dict eval_dict(const EvalReport& r) {
    py::dict d;
    d["balanced_accuracy"] = r.balanced_accuracy;
    d["balanced_f1"] = r.balanced_f1;
    d["recall"] = r.recall;
    d["balanced_precision"] = r.balanced_precision;
    const int k = r.confusion.num_classes();
    py::array_t<std::int64_t> cm({k, k});
    std::copy(r.confusion.counts().begin(), r.confusion.counts().end(), cm.mutable_data());
    d["confusion"] = cm;
    return d;
}

struct PyRun {
    TrainedModel model;
    std::vector<EpochRecord> epochs;
    std::vector<WeightSnapshot> snapshots;
};

}  // namespace

PYBIND11_MODULE(_subtail, m) {
    m.doc() = "Sub-cluster contrastive learning with distance-based class reweighting";

    py::register_exception<Error>(m, "SubtailError", PyExc_ValueError);

    m.def(
        "scl_loss",
        [](const DoubleArray& anchors, const DoubleArray& augmented, const IntArray& labels, double tau) {
            ContrastiveConfig cfg;
            cfg.tau = tau;
            return loss_tuple(scl_loss(EmbeddingBatch{to_matrix(anchors), to_matrix(augmented), to_ints(labels), {}}, cfg));
        },
        "Supervised contrastive loss; returns (value, grad_anchors, grad_augmented).", py::arg("anchors"),
        py::arg("augmented"), py::arg("labels"), py::arg("tau") = 0.1);

    m.def(
        "subcluster_loss",
        [](const DoubleArray& anchors, const DoubleArray& augmented, const IntArray& labels, const IntArray& clusters,
           double tau1, double tau2, double beta) {
            ContrastiveConfig cfg;
            cfg.tau1 = tau1;
            cfg.tau2 = tau2;
            cfg.beta = beta;
            return loss_tuple(subcluster_loss(
                EmbeddingBatch{to_matrix(anchors), to_matrix(augmented), to_ints(labels), to_ints(clusters)}, cfg));
        },
        "Sub-cluster contrastive loss; returns (value, grad_anchors, grad_augmented).", py::arg("anchors"),
        py::arg("augmented"), py::arg("labels"), py::arg("clusters"), py::arg("tau1") = 0.1, py::arg("tau2") = 0.1,
        py::arg("beta") = 1.0);

    m.def(
        "subcluster",
        [](const DoubleArray& embeddings, const IntArray& labels, int num_classes, int delta, int iterations,
           std::uint64_t seed) {
            ClusterConfig cfg{delta, iterations, seed};
            const auto a = subcluster_all(to_matrix(embeddings), to_ints(labels), num_classes, cfg);
            py::dict d;
            d["capacity"] = a.capacity;
            d["cluster_counts"] = a.cluster_counts();
            d["local"] = to_array(a.local_cluster);
            d["global"] = to_array(a.global_cluster);
            return d;
        },
        "Capacity-capped sub-clustering of unit-length embeddings, class by class.", py::arg("embeddings"),
        py::arg("labels"), py::arg("num_classes"), py::arg("delta") = 10, py::arg("iterations") = 10,
        py::arg("seed") = 0);

    m.def(
        "class_weights",
        [](const DoubleArray& embeddings, const IntArray& labels, int num_classes, int delta, int iterations,
           std::uint64_t seed) {
            const Matrix emb = to_matrix(embeddings);
            const auto y = to_ints(labels);
            const auto a = subcluster_all(emb, y, num_classes, ClusterConfig{delta, iterations, seed});
            const auto r = compute_distance_report(emb, y, num_classes, a);
            py::dict d;
            d["class_min"] = r.class_min;
            d["sub_min"] = r.sub_min;
            d["w_class"] = r.w_class;
            d["w_sub"] = r.w_sub;
            d["w_final"] = r.w_final;
            return d;
        },
        "Distance-based class weights (class, sub-cluster and combined).", py::arg("embeddings"), py::arg("labels"),
        py::arg("num_classes"), py::arg("delta") = 10, py::arg("iterations") = 10, py::arg("seed") = 0);

    m.def(
        "metrics",
        [](const IntArray& truth, const IntArray& predicted, int num_classes) {
            return eval_dict(evaluate_confusion(ConfusionMatrix::from_predictions(to_ints(truth), to_ints(predicted), num_classes)));
        },
        "Balanced accuracy, balanced precision and balanced F1.", py::arg("truth"), py::arg("predicted"),
        py::arg("num_classes"));

    m.def(
        "generate_synthetic",
        [](const std::string& spec_json) {
            const auto ds = generate_synthetic(parse_synthetic_spec(spec_json));
            return py::make_tuple(to_array(ds.features), to_array(ds.labels));
        },
        "Long-tailed Gaussian mixture from a JSON spec; returns (features, labels).", py::arg("spec_json") = "{}");

    py::class_<PyRun>(m, "TrainedRun")
        .def("predict", [](const PyRun& r, const DoubleArray& x) { return to_array(predict(r.model, to_matrix(x))); })
        .def("embed", [](const PyRun& r, const DoubleArray& x) { return to_array(encode(r.model.encoder, to_matrix(x)).embeddings); })
        .def("evaluate",
             [](const PyRun& r, const DoubleArray& x, const IntArray& y) {
                 return eval_dict(evaluate(r.model, to_dataset(x, y, static_cast<int>(r.model.classifier.b.size()))));
             })
        .def("checkpoint",
             [](const PyRun& r) {
                 const auto bytes = checkpoint_bytes(r.model);
                 return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
             })
        .def_property_readonly("epochs", [](const PyRun& r) {
            py::list out;
            for (const auto& e : r.epochs) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["warmup"] = e.warmup;
                d["reclustered"] = e.reclustered;
                d["contrastive_loss"] = e.contrastive_loss;
                d["classification_loss"] = e.classification_loss;
                d["weights"] = e.weights;
                d["cluster_counts"] = e.cluster_counts;
                out.append(d);
            }
            return out;
        });

    m.def(
        "train",
        [](const DoubleArray& x, const IntArray& y, const std::string& config_json) {
            const auto cfg = parse_run_config(config_json);
            const auto ds = to_dataset(x, y, -1);
            PyRun run;
            {
                py::gil_scoped_release release;
                auto result = train(ds, cfg.train);
                run.model = std::move(result.model);
                run.epochs = std::move(result.epochs);
                run.snapshots = std::move(result.snapshots);
            }
            return run;
        },
        "Trains on all given samples with a JSON run config (same format as the CLI).", py::arg("features"),
        py::arg("labels"), py::arg("config_json") = "{}");
}
