#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "gci/cli.hpp"

int main(int argc, char** argv) {
  gci::cli::RunConfig cfg;
  CLI::App app{"Numerical verification campaigns for the Gaussian correlation inequality"};
  app.add_option("command", cfg.command, "Campaign to run")
      ->required()
      ->check(CLI::IsMember(gci::cli::command_names()));

  std::string matrix;
  std::size_t n1 = 0;
  std::vector<double> t, lambda, x;
  auto* matrix_opt = app.add_option("--matrix", matrix, "Matrix JSON file or inline JSON object");
  auto* n1_opt = app.add_option("--n1", n1, "Size of the first coordinate block");
  auto* t_opt = app.add_option("--t", t, "Box half-widths, comma separated")->delimiter(',');
  auto* lambda_opt = app.add_option("--lambda", lambda, "Laplace arguments, comma separated")->delimiter(',');
  auto* x_opt = app.add_option("--x", x, "Density evaluation point, comma separated")->delimiter(',');
  app.add_option("--samples", cfg.samples, "Monte Carlo sample count")->capture_default_str();
  app.add_option("--grid", cfg.grid, "Number of tau grid points")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--tol", cfg.tol, "Residual tolerance for identity checks")->capture_default_str();
  app.add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--trials", cfg.trials, "Random matrices for check-identities")->capture_default_str();
  app.add_option("--dim", cfg.dim, "Dimension of random matrices")->capture_default_str();
  app.add_option("--tau", cfg.tau, "Interpolation parameter for decomposition")->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads (0 = default)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (*matrix_opt) cfg.matrix = matrix;
  if (*n1_opt) cfg.n1 = n1;
  if (*t_opt) cfg.t = t;
  if (*lambda_opt) cfg.lambda = lambda;
  if (*x_opt) cfg.x = x;
  return gci::cli::run(cfg, std::cout, std::cerr);
}
