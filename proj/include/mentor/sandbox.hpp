#pragma once

// Registry and executor for the calculator tools and wikipedia_search.
// Calls are structured (name + arguments); nothing is ever evaluated as code.

#include <charconv>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "mentor/normalize.hpp"
#include "mentor/search.hpp"
#include "mentor/trajectory.hpp"

namespace mentor {

enum class ParamType { number, integer, text, number_list };

inline std::string_view to_string(ParamType t) {
  switch (t) {
    case ParamType::number: return "number";
    case ParamType::integer: return "integer";
    case ParamType::text: return "string";
    case ParamType::number_list: return "array";
  }
  return "number";
}

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::number;
  bool required = true;
  std::optional<Json> default_value;
  std::string description;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;

  const ParamSpec* find_param(std::string_view n) const {
    for (const auto& p : params) {
      if (p.name == n) return &p;
    }
    return nullptr;
  }
};

struct ExecutionRequest {
  std::string name;
  Json arguments = Json::object();
};

/// The sandbox reports results in the same shape trajectories record them.
using ExecutionResult = Observation;

inline std::vector<ToolSpec> builtin_specs() {
  auto num = [](std::string n, std::string d) {
    return ParamSpec{std::move(n), ParamType::number, true, std::nullopt, std::move(d)};
  };
  return {
      {"add", "Add two numbers together",
       {num("firstNumber", "The first number"), num("secondNumber", "The second number")}},
      {"subtract", "Subtract one number from another",
       {num("minuend", "The number to subtract from"), num("subtrahend", "The number to subtract")}},
      {"multiply", "Multiply two numbers together",
       {num("firstNumber", "The first number"), num("secondNumber", "The second number")}},
      {"divide", "Divide one number by another",
       {num("numerator", "The number to be divided"), num("denominator", "The number to divide by")}},
      {"sum_numbers", "Calculate the sum of an array of numbers",
       {ParamSpec{"numbers", ParamType::number_list, true, std::nullopt, "Array of numbers to sum"}}},
      {"floor", "Calculate the floor of a number", {num("number", "Number to find the floor of")}},
      {"ceil", "Calculate the ceil of a number", {num("number", "Number to find the ceil of")}},
      {"round_number", "Round a number to the nearest integer", {num("number", "Number to round")}},
      {"power", "Calculate base raised to the power of exponent",
       {num("base", "The base number"), num("exponent", "The exponent")}},
      {"sqrt", "Calculate the square root of a number",
       {num("number", "Number to find the square root of")}},
      {"abs_value", "Calculate the absolute value of a number",
       {num("number", "Number to find the absolute value of")}},
      {"modulo", "Calculate the modulo of two numbers",
       {num("dividend", "The dividend"), num("divisor", "The divisor")}},
      {"wikipedia_search", "Search Wikipedia for a given query.",
       {ParamSpec{"query", ParamType::text, true, std::nullopt, "Query to search for."},
        ParamSpec{"top_n", ParamType::integer, false, Json(5),
                  "Number of results to return. The default value is 5."}}},
  };
}

inline std::optional<ToolSpec> find_builtin(std::string_view name) {
  for (auto& s : builtin_specs()) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

inline Json spec_to_json(const ToolSpec& spec) {
  Json params = Json::array();
  for (const auto& p : spec.params) {
    Json jp{{"name", p.name},
            {"type", std::string(to_string(p.type))},
            {"required", p.required},
            {"description", p.description}};
    if (p.default_value) jp["default"] = *p.default_value;
    params.push_back(std::move(jp));
  }
  return Json{{"name", spec.name}, {"description", spec.description}, {"params", std::move(params)}};
}

/// Function-signature line in the format chat templates place inside <tools>.
inline Json spec_to_function_schema(const ToolSpec& spec) {
  Json props = Json::object();
  Json required = Json::array();
  for (const auto& p : spec.params) {
    Json prop{{"type", std::string(to_string(p.type))}, {"description", p.description}};
    if (p.type == ParamType::number_list) prop["items"] = Json{{"type", "number"}};
    if (p.default_value) prop["default"] = *p.default_value;
    props[p.name] = std::move(prop);
    if (p.required) required.push_back(p.name);
  }
  return Json{{"type", "function"},
              {"function",
               {{"name", spec.name},
                {"description", spec.description},
                {"parameters", {{"type", "object"}, {"properties", props}, {"required", required}}}}}};
}

using Decimal = boost::multiprecision::cpp_dec_float_50;

namespace detail {

inline constexpr int kSignificantDigits = 30;

// JSON number -> decimal, via the shortest round-trip text for floats so
// that 0.1 is read as exactly one tenth.
inline Decimal to_decimal(const Json& v) {
  if (v.is_number_integer()) {
    return v.is_number_unsigned() ? Decimal(v.get<std::uint64_t>()) : Decimal(v.get<std::int64_t>());
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v.get<double>());
  return Decimal(std::string(buf, res.ptr));
}

}  // namespace detail

/// Plain (non-exponent) decimal text rounded to 30 significant digits and
/// canonicalized like normalize_answer does for numbers.
inline std::string render_decimal(const Decimal& value) {
  if (value == 0) return "0";
  std::string sci = value.str(detail::kSignificantDigits - 1, std::ios_base::scientific);
  bool negative = sci.front() == '-';
  if (negative) sci.erase(0, 1);
  std::size_t e = sci.find_first_of("eE");
  std::string mantissa = sci.substr(0, e);
  int exponent = std::stoi(sci.substr(e + 1));
  std::string digits;
  for (char c : mantissa) {
    if (c != '.') digits.push_back(c);
  }
  std::string plain;
  if (exponent >= 0) {
    auto int_len = static_cast<std::size_t>(exponent) + 1;
    if (digits.size() < int_len) digits.append(int_len - digits.size(), '0');
    plain = digits.substr(0, int_len) + "." + digits.substr(int_len);
  } else {
    plain = "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
  }
  if (negative) plain.insert(plain.begin(), '-');
  return canonical_decimal(plain).value_or(plain);
}

struct SandboxOptions {
  std::chrono::milliseconds call_deadline{5000};
  double max_magnitude = 1e60;
};

/// In-process or remote executor of tool calls.
class ToolExecutor {
 public:
  virtual ~ToolExecutor() = default;
  virtual ExecutionResult execute(const ExecutionRequest& req) const = 0;
};

class Sandbox final : public ToolExecutor {
 public:
  explicit Sandbox(std::shared_ptr<const SearchBackend> backend = nullptr, SandboxOptions options = {})
      : specs_(builtin_specs()),
        backend_(backend ? std::move(backend)
                         : std::make_shared<UnavailableBackend>("no search corpus configured")),
        options_(options) {}

  const std::vector<ToolSpec>& specs() const { return specs_; }
  const SandboxOptions& options() const { return options_; }

  ExecutionResult execute(const ExecutionRequest& req) const override {
    const ToolSpec* spec = nullptr;
    for (const auto& s : specs_) {
      if (s.name == req.name) spec = &s;
    }
    if (spec == nullptr) return Observation::failure(ErrorKind::unknown_tool, "unknown tool '" + req.name + "'");
    if (auto problem = validate(*spec, req.arguments)) {
      return Observation::failure(ErrorKind::bad_arguments, *problem);
    }
    try {
      if (spec->name == "wikipedia_search") return run_search(req.arguments);
      return run_math(spec->name, req.arguments);
    } catch (const BackendError& e) {
      return Observation::failure(ErrorKind::backend_error, e.what());
    } catch (const std::exception& e) {
      return Observation::failure(ErrorKind::backend_error, e.what());
    }
  }

 private:
  static std::optional<std::string> validate(const ToolSpec& spec, const Json& args) {
    if (!args.is_object()) return "arguments must be an object";
    for (auto it = args.begin(); it != args.end(); ++it) {
      const ParamSpec* p = spec.find_param(it.key());
      if (p == nullptr) return "unexpected parameter '" + it.key() + "' for " + spec.name;
      if (auto err = check_type(*p, it.value())) return err;
    }
    for (const auto& p : spec.params) {
      if (p.required && !args.contains(p.name)) return "missing required parameter '" + p.name + "'";
    }
    return std::nullopt;
  }

  static bool is_finite_number(const Json& v) {
    return v.is_number() && (!v.is_number_float() || std::isfinite(v.get<double>()));
  }

  static std::optional<std::string> check_type(const ParamSpec& p, const Json& v) {
    auto bad = [&](std::string_view want) {
      return "parameter '" + p.name + "' must be " + std::string(want);
    };
    switch (p.type) {
      case ParamType::number:
        if (!is_finite_number(v)) return bad("a finite number");
        break;
      case ParamType::integer:
        if (!is_finite_number(v) ||
            (v.is_number_float() && std::floor(v.get<double>()) != v.get<double>())) {
          return bad("an integer");
        }
        break;
      case ParamType::text:
        if (!v.is_string()) return bad("a string");
        break;
      case ParamType::number_list:
        if (!v.is_array()) return bad("an array of numbers");
        for (const auto& e : v) {
          if (!is_finite_number(e)) return bad("an array of numbers");
        }
        break;
    }
    return std::nullopt;
  }

  ExecutionResult finish(const Decimal& v) const {
    if (boost::multiprecision::abs(v) >= Decimal(options_.max_magnitude)) {
      return Observation::failure(ErrorKind::domain_error, "result magnitude out of range");
    }
    if (boost::multiprecision::abs(v) < Decimal(1) / Decimal(options_.max_magnitude)) {
      return Observation::success("0");
    }
    return Observation::success(render_decimal(v));
  }

  static Decimal integer_power(Decimal base, long long exponent) {
    bool invert = exponent < 0;
    unsigned long long e = invert ? static_cast<unsigned long long>(-exponent)
                                  : static_cast<unsigned long long>(exponent);
    Decimal result = 1;
    while (e > 0) {
      if (e & 1u) result *= base;
      base *= base;
      e >>= 1u;
    }
    return invert ? Decimal(1 / result) : result;
  }

  ExecutionResult run_math(const std::string& name, const Json& args) const {
    using boost::multiprecision::floor;
    using boost::multiprecision::ceil;
    auto arg = [&](const char* key) { return detail::to_decimal(args.at(key)); };
    auto domain = [](std::string msg) { return Observation::failure(ErrorKind::domain_error, std::move(msg)); };

    if (name == "add") return finish(arg("firstNumber") + arg("secondNumber"));
    if (name == "subtract") return finish(arg("minuend") - arg("subtrahend"));
    if (name == "multiply") return finish(arg("firstNumber") * arg("secondNumber"));
    if (name == "divide") {
      Decimal d = arg("denominator");
      if (d == 0) return domain("division by zero");
      return finish(arg("numerator") / d);
    }
    if (name == "sum_numbers") {
      Decimal total = 0;
      for (const auto& v : args.at("numbers")) total += detail::to_decimal(v);
      return finish(total);
    }
    if (name == "floor") return finish(floor(arg("number")));
    if (name == "ceil") return finish(ceil(arg("number")));
    if (name == "round_number") {
      Decimal x = arg("number");
      Decimal r = floor(boost::multiprecision::abs(x) + Decimal("0.5"));
      return finish(x < 0 ? Decimal(-r) : r);
    }
    if (name == "power") {
      Decimal base = arg("base");
      Decimal exponent = arg("exponent");
      bool integral = floor(exponent) == exponent;
      if (base == 0 && exponent < 0) return domain("zero raised to a negative power");
      if (integral && boost::multiprecision::abs(exponent) <= 100000) {
        return finish(integer_power(base, exponent.convert_to<long long>()));
      }
      if (base < 0) return domain("negative base with non-integer exponent");
      if (base == 0) return finish(Decimal(0));
      Decimal log_mag = exponent * boost::multiprecision::log10(base);
      if (log_mag > 61) return domain("result magnitude out of range");
      if (log_mag < -70) return finish(Decimal(0));
      return finish(boost::multiprecision::pow(base, exponent));
    }
    if (name == "sqrt") {
      Decimal x = arg("number");
      if (x < 0) return domain("square root of a negative number");
      return finish(boost::multiprecision::sqrt(x));
    }
    if (name == "abs_value") return finish(boost::multiprecision::abs(arg("number")));
    if (name == "modulo") {
      Decimal a = arg("dividend");
      Decimal b = arg("divisor");
      if (b == 0) return domain("modulo by zero");
      // Result takes the sign of the divisor. The quotient is rounded, so
      // nudge the remainder back into [0, b) or (b, 0].
      Decimal r = a - b * floor(a / b);
      if (b > 0 ? r < 0 : r > 0) r += b;
      if (b > 0 ? r >= b : r <= b) r -= b;
      return finish(r);
    }
    return Observation::failure(ErrorKind::unknown_tool, "unknown tool '" + name + "'");
  }

  ExecutionResult run_search(const Json& args) const {
    std::string query = args.at("query").get<std::string>();
    long long top_n = 5;
    if (args.contains("top_n")) {
      const Json& t = args["top_n"];
      top_n = t.is_number_float() ? static_cast<long long>(t.get<double>()) : t.get<long long>();
    }
    if (top_n < 1) return Observation::failure(ErrorKind::bad_arguments, "parameter 'top_n' must be positive");
    auto deadline = Clock::now() + options_.call_deadline;
    auto hits = backend_->search(query, static_cast<std::size_t>(top_n), deadline);
    std::string out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (i > 0) out += '\n';
      out += "Doc " + std::to_string(i + 1) + "(Title: " + hits[i].title + ") " + hits[i].passage;
    }
    return Observation::success(std::move(out));
  }

  std::vector<ToolSpec> specs_;
  std::shared_ptr<const SearchBackend> backend_;
  SandboxOptions options_;
};

/// Text of an execution result as shown to a model in a tool-role message.
inline std::string render_result_text(const ExecutionResult& r) {
  if (r.ok()) return *r.value;
  return "Error (" + std::string(to_string(r.error->kind)) + "): " + r.error->message;
}

}  // namespace mentor
