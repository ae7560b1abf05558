#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <variant>

#include "iva/cli.hpp"
#include "iva/dataset.hpp"
#include "iva/error.hpp"
#include "iva/instruction.hpp"
#include "iva/response.hpp"
#include "iva/scoring.hpp"

namespace py = pybind11;
using namespace iva;

namespace {

// Numbers come in as str (kept verbatim) or float (rounded to canonical form).
Decimal to_decimal(const py::handle& h) {
    if (py::isinstance<py::str>(h)) return Decimal::from_token(h.cast<std::string>());
    return Decimal::from_double(h.cast<double>());
}

template <std::size_t N>
std::array<Decimal, N> to_decimals(const py::sequence& seq, const char* what) {
    if (py::len(seq) != N) {
        throw py::value_error(std::string(what) + " needs " + std::to_string(N) + " values");
    }
    std::array<Decimal, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = to_decimal(seq[i]);
    return out;
}

template <std::size_t N>
py::list from_decimals(const std::array<Decimal, N>& values) {
    py::list out;
    for (const auto& d : values) out.append(d.value());
    return out;
}

std::string render(const std::string& robot, const std::string& control_mode, const std::string& task_sentence,
                   const std::vector<py::sequence>& history, int horizon) {
    InstructionSpec spec{robot, control_mode, task_sentence, {}, horizon};
    for (const auto& row : history) spec.history.push_back({to_decimals<kJointCount>(row, "joint state")});
    return render_instruction(spec);
}

py::dict parse(const std::string& text) {
    auto spec = parse_instruction(text);
    py::list history;
    for (const auto& s : spec.history) history.append(from_decimals(s.joints));
    py::dict d;
    d["robot"] = spec.robot;
    d["control_mode"] = spec.control_mode;
    d["task_sentence"] = spec.task_sentence;
    d["history"] = history;
    d["horizon"] = spec.horizon;
    return d;
}

py::dict response_to_dict(const PolicyResponse& r) {
    py::dict d;
    d["kind"] = std::string(response_kind(r));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Accept>) {
                py::list trace;
                for (const auto& p : v.visual_trace) trace.append(py::make_tuple(p.row, p.col));
                d["visual_trace"] = trace;
                d["action"] = from_decimals(v.action);
            } else if constexpr (std::is_same_v<T, Clarify>) {
                d["missing_object"] = v.missing_object;
                d["suggested_object"] = v.suggested_object;
            } else if constexpr (std::is_same_v<T, Refuse>) {
                d["missing_object"] = v.missing_object;
            } else {
                d["raw_text"] = v.raw_text;
            }
        },
        r);
    return d;
}

PolicyResponse response_from_dict(const py::dict& d) {
    auto kind = d["kind"].cast<std::string>();
    if (kind == "accept") {
        Accept a;
        for (auto p : d["visual_trace"].cast<py::sequence>()) {
            auto pair = p.cast<py::sequence>();
            if (py::len(pair) != 2) throw py::value_error("trace points are [row, col] pairs");
            a.visual_trace.push_back({pair[0].cast<int>(), pair[1].cast<int>()});
        }
        a.action = to_decimals<kActionDim>(d["action"].cast<py::sequence>(), "action");
        return a;
    }
    if (kind == "clarify") {
        return Clarify{d["missing_object"].cast<std::string>(), d["suggested_object"].cast<std::string>()};
    }
    if (kind == "refuse") return Refuse{d["missing_object"].cast<std::string>()};
    if (kind == "malformed") return Malformed{d["raw_text"].cast<std::string>()};
    throw py::value_error("unknown response kind: " + kind);
}

py::tuple run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "iva-bench");
    std::ostringstream out;
    std::ostringstream err;
    int code;
    {
        py::gil_scoped_release release;
        code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the iva-bench harness core";
    m.attr("__version__") = cli::kToolVersion;

    static PyObject* base = PyErr_NewException("iva_bench._core.IvaError", PyExc_ValueError, nullptr);
    static PyObject* parse_error = PyErr_NewException("iva_bench._core.ParseError", base, nullptr);
    static PyObject* transport_error = PyErr_NewException("iva_bench._core.TransportError", base, nullptr);
    m.attr("IvaError") = py::reinterpret_borrow<py::object>(base);
    m.attr("ParseError") = py::reinterpret_borrow<py::object>(parse_error);
    m.attr("TransportError") = py::reinterpret_borrow<py::object>(transport_error);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ParseError& e) {
            py::object exc = py::reinterpret_borrow<py::object>(parse_error)(e.what());
            exc.attr("position") = e.position();
            PyErr_SetObject(parse_error, exc.ptr());
        } catch (const TransportError& e) {
            PyErr_SetString(transport_error, e.what());
        } catch (const Error& e) {
            PyErr_SetString(base, e.what());
        }
    });

    m.def("render_instruction", &render, py::arg("robot"), py::arg("control_mode"), py::arg("task_sentence"),
          py::arg("history"), py::arg("horizon") = 1,
          "Canonical instruction text. History rows are 7 joint values, str or float.");
    m.def("parse_instruction", &parse, py::arg("text"));
    m.def(
        "parse_response", [](const std::string& text) { return response_to_dict(parse_response(text)); },
        py::arg("text"));
    m.def(
        "render_response", [](const py::dict& d) { return render_response(response_from_dict(d)); },
        py::arg("response"));
    m.def(
        "extract_target_noun",
        [](const std::string& sentence) { return extract_target_noun(sentence, builtin_lexicon()); },
        py::arg("task_sentence"));
    m.def("head_noun", [](const std::string& phrase) { return head_noun(phrase); }, py::arg("phrase"));
    m.def("fp_step_count", &fp_step_count, py::arg("steps"), py::arg("rate"));
    m.def(
        "partition_counts",
        [](std::size_t n, double frac_id, double frac_ood) {
            GenConfig cfg;
            cfg.frac_id_episodes = frac_id;
            cfg.frac_ood_episodes = frac_ood;
            cfg.validate();
            auto c = partition_counts(n, cfg);
            py::dict d;
            d["in_domain"] = c.in_domain;
            d["out_of_domain"] = c.out_of_domain;
            d["true_premise"] = c.true_premise;
            return d;
        },
        py::arg("episodes"), py::arg("frac_id") = 0.65, py::arg("frac_ood") = 0.20);
    m.def("overall_success", &overall_success, py::arg("tp_success"), py::arg("fp_success"));
    m.def("builtin_tasks", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& t : builtin_tasks()) out.emplace_back(t.name, t.pattern);
        return out;
    });
    m.def("run_cli", &run_cli, py::arg("args"),
          "Runs the iva-bench command line in process. Returns (exit_code, stdout, stderr).");
}
