// Python bindings for the pricing core. The service and benchmark layers
// stay C++-only; what python gets is the deterministic math: option specs,
// the closed form, the MC estimator, and the counter-based normal stream,
// enough to reproduce or cross-check any number the service emits.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>

#include "mcesvc/pricing.hpp"
#include "mcesvc/rng.hpp"

namespace py = pybind11;
using namespace mce;

namespace {

std::string kind_repr(OptionKind kind) {
  return kind == OptionKind::kCall ? "call" : "put";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Monte-Carlo option pricing core (GBM terminal values, "
            "counter-based RNG, Black-Scholes reference)";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);

  py::enum_<OptionKind>(m, "OptionKind")
      .value("CALL", OptionKind::kCall)
      .value("PUT", OptionKind::kPut);

  py::class_<OptionSpec>(m, "OptionSpec")
      .def(py::init([](double spot, double strike, double rate,
                       double volatility, double expiry, OptionKind kind) {
             OptionSpec spec{spot, strike, rate, volatility, expiry, kind};
             return spec;
           }),
           py::arg("spot"), py::arg("strike"), py::arg("rate"),
           py::arg("volatility"), py::arg("expiry"),
           py::arg("kind") = OptionKind::kCall)
      .def_readwrite("spot", &OptionSpec::spot)
      .def_readwrite("strike", &OptionSpec::strike)
      .def_readwrite("rate", &OptionSpec::rate)
      .def_readwrite("volatility", &OptionSpec::volatility)
      .def_readwrite("expiry", &OptionSpec::expiry)
      .def_readwrite("kind", &OptionSpec::kind)
      .def("__repr__", [](const OptionSpec& s) {
        std::ostringstream out;
        out << "OptionSpec(spot=" << s.spot << ", strike=" << s.strike
            << ", rate=" << s.rate << ", volatility=" << s.volatility
            << ", expiry=" << s.expiry << ", kind=" << kind_repr(s.kind)
            << ")";
        return out.str();
      });

  py::class_<SimParams>(m, "SimParams")
      .def(py::init([](std::uint64_t paths, std::uint64_t seed) {
             return SimParams{paths, seed};
           }),
           py::arg("paths"), py::arg("seed"))
      .def_readwrite("paths", &SimParams::paths)
      .def_readwrite("seed", &SimParams::seed)
      .def("__repr__", [](const SimParams& p) {
        std::ostringstream out;
        out << "SimParams(paths=" << p.paths << ", seed=" << p.seed << ")";
        return out.str();
      });

  py::class_<PriceEstimate>(m, "PriceEstimate")
      .def_readonly("price", &PriceEstimate::price)
      .def_readonly("std_error", &PriceEstimate::std_error)
      .def_readonly("paths_used", &PriceEstimate::paths_used)
      .def("__repr__", [](const PriceEstimate& e) {
        std::ostringstream out;
        out << "PriceEstimate(price=" << e.price
            << ", std_error=" << e.std_error
            << ", paths_used=" << e.paths_used << ")";
        return out.str();
      });

  m.def("price_mc", &price_mc, py::arg("spec"), py::arg("sim"),
        py::arg("threads") = 1,
        py::call_guard<py::gil_scoped_release>(),
        "Monte-Carlo price and standard error. Deterministic in (spec, sim) "
        "for any thread count.");
  m.def("price_bs", &price_bs, py::arg("spec"),
        "Black-Scholes closed-form price.");
  m.def("norm_cdf", &norm_cdf, py::arg("x"),
        "Standard normal CDF used by the closed form.");
  m.def("simulate_terminal", &simulate_terminal, py::arg("spec"),
        py::arg("sim"), py::call_guard<py::gil_scoped_release>(),
        "Terminal GBM prices, one per path, in path order.");
  m.def("normal_at", &normal_at, py::arg("seed"), py::arg("index"),
        "Standard normal draw `index` of the stream keyed by `seed`.");

  py::class_<NormalStream>(m, "NormalStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &NormalStream::next)
      .def_property_readonly("seed", &NormalStream::seed)
      .def_property_readonly("index", &NormalStream::index);
}
