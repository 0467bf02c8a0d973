#include "fiberstrat/cli.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "fiberstrat/dag.hpp"
#include "fiberstrat/flow.hpp"
#include "fiberstrat/io.hpp"
#include "fiberstrat/moves.hpp"
#include "fiberstrat/network.hpp"
#include "fiberstrat/ranklist.hpp"
#include "fiberstrat/tangent.hpp"

namespace fiberstrat::cli {

namespace {

// argument combinations CLI11 can't express (e.g. weights file vs --w1..);
// mapped to exit_usage with help text
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int max_csv_layers = 9;  // --w1 .. --w9; deeper networks use JSON

std::vector<Int> parse_widths(const std::string& text) {
  std::vector<Int> widths;
  std::string tok;
  for (size_t pos = 0; pos <= text.size(); ++pos) {
    if (pos < text.size() && text[pos] != ',') {
      tok.push_back(text[pos]);
      continue;
    }
    size_t used = 0;
    Int v = 0;
    try {
      v = static_cast<Int>(std::stoll(tok, &used));
    } catch (const std::exception&) {
      used = tok.size() + 1;
    }
    if (tok.empty() || used != tok.size())
      throw std::invalid_argument("--d expects comma-separated layer sizes, got \"" +
                                  text + "\"");
    widths.push_back(v);
    tok.clear();
  }
  return widths;
}

// everything a subcommand might bind; only the registered options are used
struct Options {
  std::string d_list;
  Int rank = 0;
  std::string ranklist_path;
  std::string from_path, to_path;
  std::string weights_path;
  std::string w_csv_path;
  std::vector<std::string> layer_csv = std::vector<std::string>(max_csv_layers);
  std::string emit;
  std::string format = "table";
  std::string out_path;
  std::uint64_t seed = 0;
  double rank_tol = Tolerances{}.rank_rel;
  double angle_tol = Tolerances{}.angle;
};

Tolerances tolerances(const Options& opt) {
  const Tolerances tol{opt.rank_tol, opt.angle_tol};
  validate(tol);
  return tol;
}

void emit_text(const Options& opt, std::ostream& out, const std::string& text) {
  if (opt.out_path.empty())
    out << text;
  else
    io::write_file(opt.out_path, text);
}

RankList load_ranklist(const std::string& path) {
  return io::ranklist_from_json(io::read_file(path));
}

// weights come either from one JSON file or from per-layer CSV matrices
// (--w1 a.csv --w2 b.csv ...), never both
WeightVector load_weights(const Options& opt) {
  Int n_csv = 0;
  while (n_csv < max_csv_layers && !opt.layer_csv[static_cast<size_t>(n_csv)].empty())
    ++n_csv;
  for (Int j = n_csv; j < max_csv_layers; ++j)
    if (!opt.layer_csv[static_cast<size_t>(j)].empty())
      throw UsageError("--w" + std::to_string(j + 1) + " given without --w" +
                       std::to_string(j));

  if (n_csv == 0) {
    if (opt.weights_path.empty())
      throw UsageError("provide a weights JSON file or --w1 ... --wL CSV matrices");
    return io::weights_from_json(io::read_file(opt.weights_path));
  }
  if (!opt.weights_path.empty())
    throw UsageError("give either a weights JSON file or --wj CSV matrices, not both");

  std::vector<Eigen::MatrixXd> mats;
  for (Int j = 0; j < n_csv; ++j)
    mats.push_back(io::csv_to_matrix(io::read_file(opt.layer_csv[static_cast<size_t>(j)])));
  std::vector<Int> widths{static_cast<Int>(mats.front().cols())};
  for (const Eigen::MatrixXd& M : mats) widths.push_back(static_cast<Int>(M.rows()));
  WeightVector th{make_shape(widths), std::move(mats)};
  for (Int j = 1; j < n_csv; ++j)
    if (th.Wmat(j + 1).cols() != th.Wmat(j).rows())
      throw std::invalid_argument("--w" + std::to_string(j + 1) + " has " +
                                  std::to_string(th.Wmat(j + 1).cols()) +
                                  " columns but --w" + std::to_string(j) + " has " +
                                  std::to_string(th.Wmat(j).rows()) + " rows");
  validate_weights(th);
  return th;
}

void print_triangle(std::ostream& os, const char* title, Int L,
                    const std::function<Int(Int, Int)>& value) {
  os << title << "\n";
  for (Int k = 0; k <= L; ++k) {
    os << "  k=" << k << ":";
    for (Int i = 0; i <= k; ++i) os << " " << value(k, i);
    os << "\n";
  }
}

int run_dag(const Options& opt, std::ostream& out) {
  const NetworkShape shape = make_shape(parse_widths(opt.d_list));
  const StratumDag dag = build_dag(shape, opt.rank);
  std::string text;
  if (opt.format == "json")
    text = io::dag_to_json(dag);
  else if (opt.format == "dot")
    text = io::dag_to_dot(dag);
  else
    text = io::dag_to_table(dag);
  emit_text(opt, out, text);
  return exit_ok;
}

int run_moves(const Options& opt, std::ostream& out) {
  const RankList r = load_ranklist(opt.from_path);
  const RankList s = load_ranklist(opt.to_path);
  if (!(r.shape == s.shape))
    throw std::invalid_argument("--from and --to rank lists have different shapes");
  emit_text(opt, out, io::moves_to_json(find_all_moves(r, s)));
  return exit_ok;
}

int run_canonical(const Options& opt, std::ostream& out) {
  const RankList r = load_ranklist(opt.ranklist_path);
  emit_text(opt, out, io::weights_to_json(canonical_weight_vector(r)));
  return exit_ok;
}

int run_sample(const Options& opt, std::ostream& out) {
  const Tolerances tol = tolerances(opt);
  const RankList r = load_ranklist(opt.ranklist_path);
  Eigen::MatrixXd W;
  if (opt.w_csv_path.empty()) {
    W = random_matrix_with_rank(r.shape.width(r.shape.L()), r.shape.width(0),
                                r.fiber_rank(), opt.seed, tol);
  } else {
    W = io::csv_to_matrix(io::read_file(opt.w_csv_path));
  }
  emit_text(opt, out, io::weights_to_json(sample_on_stratum(W, r, opt.seed, tol)));
  return exit_ok;
}

int run_analyze(const Options& opt, std::ostream& out) {
  const Tolerances tol = tolerances(opt);
  const WeightVector th = load_weights(opt);
  const RankList r = ranklist_of(th, tol);
  const IntervalMultiset w = omega_of(r);
  const DimensionLedger led = dimension_ledger(r);

  std::ostringstream os;
  os << "d=(";
  for (size_t j = 0; j < th.shape.d.size(); ++j) os << (j ? "," : "") << th.shape.d[j];
  os << ")  rk W=" << r.fiber_rank() << "\n\n";
  print_triangle(os, "numerical rank list r(k,i), i = 0..k per row:", th.shape.L(),
                 [&](Int k, Int i) { return r.at(k, i); });
  os << "\n";
  print_triangle(os, "interval multiplicities w(k,i):", th.shape.L(),
                 [&](Int k, Int i) { return w.at(k, i); });
  os << "\nledger: d_theta=" << led.d_theta << "  rk dmu=" << led.rank_dmu
     << "  dim=" << led.dim() << "  dof=" << led.dof() << "  rdof=" << led.rdof()
     << "\n\n";

  const TheoremReport report = verify_fundamental_theorem(th, tol);
  os << format(report);
  out << os.str();
  return report.all_pass ? exit_ok : exit_verification;
}

int run_spaces(const Options& opt, std::ostream& out) {
  const Tolerances tol = tolerances(opt);
  const WeightVector th = load_weights(opt);
  Subspace space;
  if (opt.emit == "nulldmu") {
    space = nullspace_dmu(th, tol);
  } else if (opt.emit == "rowdmu") {
    space = rowspace_dmu_direct(th, tol);
  } else {
    const FlowSystem flow = build_flow_prebases(th, std::nullopt, tol);
    space = opt.emit == "tangent" ? tangent_space(flow) : normal_space(flow);
  }
  emit_text(opt, out, io::basis_to_json(space.basis()));
  return exit_ok;
}

int run_verify(const Options& opt, std::ostream& out) {
  const Tolerances tol = tolerances(opt);
  const WeightVector th = load_weights(opt);
  const TheoremReport theorem = verify_fundamental_theorem(th, tol);
  out << format(theorem);
  if (!theorem.all_pass) {
    out << "verification FAILED\n";
    return exit_verification;
  }
  const FlowSystem flow = build_flow_prebases(th, std::nullopt, tol);
  const GeometryReport geometry = verify_geometry(flow);
  out << "\n" << format(geometry);
  if (!geometry.all_pass) {
    out << "verification FAILED\n";
    return exit_verification;
  }
  out << "verification OK\n";
  return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"rank stratification of the fiber of a fully-connected linear network",
               "fiberstrat"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expanded help for every subcommand");

  const auto widths_ok = CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          make_shape(parse_widths(s));
          return {};
        } catch (const std::exception& e) {
          return std::string(e.what());
        }
      },
      "D0,..,DL", "layer size list");

  auto add_tols = [&](CLI::App* sub) {
    sub->add_option("--rank-tol", opt.rank_tol,
                    "relative singular-value cutoff for numerical ranks");
    sub->add_option("--angle-tol", opt.angle_tol,
                    "principal-angle tolerance for subspace comparisons");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out_path, "write the result to this file");
  };
  auto add_weight_inputs = [&](CLI::App* sub) {
    sub->add_option("weights", opt.weights_path, "weights JSON file");
    for (int j = 1; j <= max_csv_layers; ++j)
      sub->add_option("--w" + std::to_string(j), opt.layer_csv[static_cast<size_t>(j - 1)],
                      j == 1 ? "CSV matrix for layer j (alternative to weights JSON)" : "");
  };

  CLI::App* dag = app.add_subcommand("dag", "enumerate the strata of a fiber and their dag");
  dag->add_option("--d", opt.d_list, "layer sizes d_0,..,d_L")->required()->check(widths_ok);
  dag->add_option("--rank", opt.rank, "rank of the product matrix W")->required();
  dag->add_option("--format", opt.format, "dot|json|table (default table)")
      ->check(CLI::IsMember({"dot", "json", "table"}));
  add_out(dag);

  CLI::App* moves = app.add_subcommand("moves", "plan a move sequence between two rank lists");
  moves->add_option("--from", opt.from_path, "rank-list JSON of the start")->required();
  moves->add_option("--to", opt.to_path, "rank-list JSON of the goal")->required();
  add_out(moves);

  CLI::App* canonical =
      app.add_subcommand("canonical", "canonical weight vector realizing a rank list");
  canonical->add_option("--ranklist", opt.ranklist_path, "rank-list JSON")->required();
  add_out(canonical);

  CLI::App* sample = app.add_subcommand(
      "sample", "random weight vector on a prescribed stratum of a fiber");
  sample->add_option("--ranklist", opt.ranklist_path, "rank-list JSON")->required();
  sample->add_option("--w", opt.w_csv_path,
                     "CSV of the product matrix W (default: seeded random of matching rank)");
  sample->add_option("--seed", opt.seed, "PRNG seed")->envname("FIBERSTRAT_SEED");
  add_tols(sample);
  add_out(sample);

  CLI::App* analyze =
      app.add_subcommand("analyze", "rank list, multiplicities, ledger, and flow checks");
  add_weight_inputs(analyze);
  add_tols(analyze);

  CLI::App* spaces = app.add_subcommand("spaces", "emit a basis of a geometric subspace");
  add_weight_inputs(spaces);
  spaces->add_option("--emit", opt.emit, "tangent|normal|nulldmu|rowdmu")
      ->required()
      ->check(CLI::IsMember({"tangent", "normal", "nulldmu", "rowdmu"}));
  add_tols(spaces);
  add_out(spaces);

  CLI::App* verify =
      app.add_subcommand("verify", "run every structure and geometry check at a point");
  add_weight_inputs(verify);
  add_tols(verify);

  const auto deepest = [&]() {
    const CLI::App* target = &app;
    while (!target->get_subcommands().empty()) target = target->get_subcommands().front();
    return target;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << deepest()->help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << deepest()->help();
    return exit_usage;
  }

  try {
    if (app.got_subcommand(dag)) return run_dag(opt, out);
    if (app.got_subcommand(moves)) return run_moves(opt, out);
    if (app.got_subcommand(canonical)) return run_canonical(opt, out);
    if (app.got_subcommand(sample)) return run_sample(opt, out);
    if (app.got_subcommand(analyze)) return run_analyze(opt, out);
    if (app.got_subcommand(spaces)) return run_spaces(opt, out);
    if (app.got_subcommand(verify)) return run_verify(opt, out);
    err << "error: no subcommand\n";
    return exit_usage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << deepest()->help();
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_domain_error;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_domain_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_domain_error;
  }
}

}  // namespace fiberstrat::cli
