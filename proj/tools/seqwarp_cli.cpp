#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "seqwarp/verify.hpp"

namespace fs = std::filesystem;
using namespace seqwarp;

namespace {

#ifndef SEQWARP_CATALOG_DIR
#define SEQWARP_CATALOG_DIR "catalog"
#endif

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

void print_summary(const VerificationReport& r, std::ostream& os) {
  const auto& doc = r.document;
  os << "spec " << doc["spec"]["name"].get<std::string>() << " (" << doc["spec"]["kind"].get<std::string>() << ", "
     << doc["sampling"]["points"].get<std::size_t>() << " points, seed " << doc["sampling"]["seed"].get<std::uint64_t>()
     << ")\n";
  for (const auto& id : r.identities) {
    os << "  " << std::left << std::setw(34) << id.name << std::setw(15) << id.status << fmt(id.max_abs_residual)
       << " / " << fmt(id.tolerance) << (id.informational ? "  [info]" : "") << "\n";
  }
  const auto& qe = doc["fits"]["quasi_einstein"];
  os << "  fits: einstein " << qe["einstein"] << ", quasi-einstein " << qe["quasi-einstein"] << ", neither "
     << qe["neither"] << "\n";
  os << (r.pass ? "PASS" : "FAIL") << "\n";
}

void print_classify(const nlohmann::ordered_json& doc, std::ostream& os) {
  os << "point";
  for (const auto& [k, v] : doc["point"].items()) os << " " << k << "=" << v.get<double>();
  os << "\n";
  auto line = [&](const std::string& label, const nlohmann::ordered_json& f) {
    os << "  " << std::left << std::setw(10) << label << std::setw(16) << f["verdict"].get<std::string>();
    for (const char* k : {"alpha", "beta"}) os << k << " " << (f[k].is_null() ? std::string("n/a") : fmt(f[k].get<double>())) << "  ";
    os << "|A| " << fmt(f["A_norm"].get<double>()) << "  residual "
       << (f["residual"].is_null() ? std::string("n/a") : fmt(f["residual"].get<double>())) << "\n";
  };
  line("ambient", doc["ambient"]);
  const auto& q = doc["quasi_constant_curvature"];
  if (q.contains("error"))
    os << "  qcc       " << q["error"].get<std::string>() << "\n";
  else
    os << "  qcc       " << (q["pass"].get<bool>() ? "pass" : "fail") << "  a " << fmt(q["a"].get<double>()) << "  b "
       << fmt(q["b"].get<double>()) << "  residual " << fmt(q["residual"].get<double>()) << "\n";
  for (const auto& f : doc["factors"]) line(f["factor"].get<std::string>(), f);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

EvalPoint parse_at(const std::string& text) {
  EvalPoint at;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw SpecError("--at", "expected coord=value, got '" + item + "'");
    try {
      at[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw SpecError("--at", "bad number in '" + item + "'");
    }
  }
  return at;
}

std::vector<fs::path> catalog_entries(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".spec") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Runs fn and maps input problems to exit code 2.
template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const SpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const GeometryError& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return exit_input_error;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential warped product curvature verifier"};
  app.require_subcommand(1);

  std::string spec_path, out_path, at_text, catalog = SEQWARP_CATALOG_DIR;
  std::size_t points = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> tol_overrides;
  bool as_json = false;

  auto* verify = app.add_subcommand("verify", "run the identity suite on a spec file");
  verify->add_option("spec", spec_path, "spec file")->required();
  auto* opt_points = verify->add_option("--points", points, "number of sample points");
  auto* opt_seed = verify->add_option("--seed", seed, "sampling seed");
  verify->add_option("--tol", tol_overrides, "tolerance override K=V")->take_all();
  verify->add_option("-o,--output", out_path, "write the JSON report here");
  verify->add_flag("--json", as_json, "print the JSON report instead of the summary");

  auto* classify = app.add_subcommand("classify", "QE and QCC fits at one point");
  classify->add_option("spec", spec_path, "spec file")->required();
  classify->add_option("--at", at_text, "coord=value,...");
  classify->add_option("-o,--output", out_path, "write the JSON result here");
  classify->add_flag("--json", as_json, "print JSON");

  auto* examples = app.add_subcommand("examples", "bundled catalog");
  std::vector<std::string> ex_args;
  examples->add_option("action", ex_args, "list | run <name> | run-all");
  examples->add_option("--catalog", catalog, "catalog directory");

  CLI11_PARSE(app, argc, argv);

  if (*verify) {
    return guarded([&] {
      VerifyOptions opt;
      if (*opt_points) opt.points = points;
      if (*opt_seed) opt.seed = seed;
      for (const auto& kv : tol_overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw SpecError("--tol", "expected K=V, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        if (!default_tolerances().count(key)) throw SpecError("--tol", "unknown tolerance '" + key + "'");
        try {
          opt.tolerances[key] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
          throw SpecError("--tol", "bad value in '" + kv + "'");
        }
      }
      const auto report = run_verify(load_spec(spec_path), opt);
      if (!out_path.empty()) write_file(out_path, report.dump());
      if (as_json)
        std::cout << report.dump();
      else
        print_summary(report, std::cout);
      return report.exit_code;
    });
  }

  if (*classify) {
    return guarded([&] {
      const auto doc = run_classify(load_spec(spec_path), parse_at(at_text));
      if (!out_path.empty()) write_file(out_path, doc.dump(2) + "\n");
      if (as_json)
        std::cout << doc.dump(2) << "\n";
      else
        print_classify(doc, std::cout);
      return 0;
    });
  }

  return guarded([&] {
    const std::string action = ex_args.empty() ? "list" : ex_args[0];
    const auto entries = catalog_entries(catalog);
    if (action == "list") {
      for (const auto& p : entries) {
        const auto s = load_spec(p.string());
        std::cout << std::left << std::setw(20) << p.stem().string() << to_string(s.kind) << "\n";
      }
      return 0;
    }
    if (action == "run") {
      if (ex_args.size() < 2) throw SpecError("examples", "run needs a name");
      const fs::path p = fs::path(catalog) / (ex_args[1] + ".spec");
      if (!fs::exists(p)) throw SpecError("examples", "no bundled example '" + ex_args[1] + "'");
      const auto report = run_verify(load_spec(p.string()));
      print_summary(report, std::cout);
      return report.exit_code;
    }
    if (action == "run-all") {
      int code = 0;
      for (const auto& p : entries) {
        const auto report = run_verify(load_spec(p.string()));
        std::cout << std::left << std::setw(20) << p.stem().string() << (report.pass ? "PASS" : "FAIL") << "\n";
        code = std::max(code, report.exit_code);
      }
      return code;
    }
    throw SpecError("examples", "unknown action '" + action + "'");
  });
}
