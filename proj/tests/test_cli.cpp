#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bssfp/circuit.hpp"
#include "bssfp/compile.hpp"
#include "bssfp/machine.hpp"
#include "bssfp/problems.hpp"

using namespace bssfp;

namespace {

struct Result {
        int code = -1;
        std::string out;
};

std::string bin()
{
        const char *b = std::getenv("BSSFP_BIN");
        return b ? b : "./bssfp";
}

Result sh(const std::string &args, const std::string &env = "")
{
        std::string cmd = env + (env.empty() ? "" : " ") + bin() + " " + args + " 2>/dev/null";
        Result r;
        FILE *p = popen(cmd.c_str(), "r");
        REQUIRE(p);
        std::array<char, 4096> buf;
        size_t n;
        while ((n = fread(buf.data(), 1, buf.size(), p)) > 0)
                r.out.append(buf.data(), n);
        int st = pclose(p);
        r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
        return r;
}

std::filesystem::path scratch()
{
        auto d = std::filesystem::temp_directory_path() / ("bssfp_cli_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
}

std::string slurp(const std::filesystem::path &p)
{
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
}

bool has_line(const std::string &text, const std::string &line)
{
        std::istringstream in(text);
        std::string l;
        while (std::getline(in, l))
                if (l == line)
                        return true;
        return false;
}

} // namespace

TEST_CASE("run: exit codes and the cantor example")
{
        auto dir = scratch();
        auto mfile = (dir / "cantor.bm").string();
        auto tfile = (dir / "trace.txt").string();
        auto r = sh("run --problem cantor --emit-machine " + mfile + " --input 1/2,1/64 --mode strong --eps 1/64 --trace " +
                    tfile);
        CHECK(r.code == 0);
        CHECK(has_line(r.out, "outcome accept"));
        /* the file re-parses to the registry machine */
        CHECK(Machine::load_file(mfile).str() == cantor_machine().str());
        auto again = sh("run --machine " + mfile + " --input 1/2,1/64 --mode strong --eps 1/64");
        CHECK(again.out == r.out);
        /* same step count as the library run */
        auto lib = cantor_machine_run(Rational(1, 2), Rational(1, 64), EvalMode::strong(Rational(1, 64)));
        CHECK(has_line(r.out, "steps " + std::to_string(lib.steps)));
        CHECK(!slurp(tfile).empty());

        CHECK(sh("run --problem cantor --input 0,1/64 --mode strong --eps 1/64 --budget 3000").code == 2);
        CHECK(sh("run --problem x-le-1 --input 3,1/64 --mode strong --eps 1/64").code == 1);
        CHECK(sh("run --problem x-le-1 --input 1/2,1/64 --mode strong --eps 1/64").code == 0);
        CHECK(sh("run --problem nope --input 1").code == 3);
        CHECK(sh("run --problem cantor --input 1/2,1/64 --mode fuzzy --eps 1/64").code == 3);
        CHECK(sh("run --problem cantor --input 1/2,1/64 --mode strong").code == 3);
        CHECK(sh("run --problem cantor --input 0.5,1/64").code == 0);
        CHECK(sh("run --problem cantor --input a/b").code == 3);
        CHECK(sh("").code == 3);
}

TEST_CASE("seed: flag, environment and determinism")
{
        const std::string cmd = "run --problem cantor --input 1/3,1/16 --mode weak:random --eps 1/16 --budget 400";
        auto a = sh(cmd + " --seed 5"), b = sh(cmd + " --seed 5"), c = sh(cmd, "BSSFP_SEED=5"), d = sh(cmd + " --seed 6");
        CHECK(a.out == b.out);
        CHECK(a.out == c.out);
        CHECK(has_line(a.out, "mode weak(1/16,seeded_random(5))"));
        CHECK(has_line(d.out, "mode weak(1/16,seeded_random(6))"));
        auto e = sh("run --problem cantor --input 1/3,1/16 --mode weak:adversarial- --eps 1/16 --budget 400");
        CHECK(has_line(e.out, "mode weak(1/16,adversarial(1,-1))"));
}

TEST_CASE("compile, eval and rho round trip")
{
        auto dir = scratch();
        auto cfile = (dir / "toy.circ").string(), lfile = (dir / "layers.txt").string();
        auto r = sh("compile --problem toy-root --T 12 --backend selector --x 4 --free 2 --out " + cfile + " --layers " + lfile);
        REQUIRE(r.code == 0);
        auto lib = compile(toy_root_machine(), 12, {Rational(4)}, 2, Backend::SelectorTree);
        Circuit c = Circuit::load_file(cfile);
        CHECK(c.str() == lib.circuit.str());
        CHECK(slurp(lfile) == lib.layer_map_str());
        CHECK(sh("compile --problem toy-root --T 12 --x 4 --free 2").out == lib.circuit.str());

        CHECK(sh("eval --circuit " + cfile + " --input 2 --delta 1/2 --mode strong --eps 1/1024").code == 0);
        CHECK(sh("eval --circuit " + cfile + " --input 3 --delta 1/2").code == 1);
        CHECK(sh("compile --problem toy-root --T 12 --x 4 --backend quantum").code == 3);
        CHECK(sh("eval --circuit " + (dir / "missing").string() + " --input 1").code == 3);

        /* y^2 - 2 with delta read last */
        auto small = (dir / "small.circ").string();
        Circuit s;
        int y = s.add_input();
        s.add_input();
        int yy = s.add_op(Op::Mul, y, y);
        s.add_op(Op::Sub, yy, s.add_const(2));
        {
                std::ofstream out(small);
                out << s.str();
        }
        auto rho = sh("rho --circuit " + small + " --t-max 12");
        CHECK(rho.code == 0);
        CHECK(rho.out.rfind("rho ", 0) == 0);
}

TEST_CASE("verify")
{
        auto dir = scratch();
        auto cfile = (dir / "c.circ").string(), wfile = (dir / "w.txt").string();
        Circuit c;
        int x = c.add_input();
        c.add_input();
        c.add_op(Op::Mul, x, x);
        {
                std::ofstream out(cfile);
                out << c.str();
        }
        auto ev = eval_circuit(c, circuit_input(c, {Rational(3)}, Rational(1, 8)), EvalMode::exact());
        {
                std::ofstream out(wfile);
                out << witness_from_eval({Rational(3)}, Rational(1, 8), ev).str();
        }
        auto r = sh("verify " + cfile + " " + wfile + " --delta 1/8 --epsilon 1/4096 --mode strong");
        CHECK(r.code == 0);
        CHECK(!r.out.empty());
        CHECK(sh("verify " + cfile + " " + wfile + " --delta 1/8 --epsilon 1/4096 --mode weak:adversarial").code <= 1);
        CHECK(sh("verify " + cfile).code == 3);
}

TEST_CASE("condition and reduce")
{
        auto r = sh("condition --problem cantor --input 1/2,1/64");
        CHECK(r.code == 0);
        CHECK(has_line(r.out, "mu 6"));
        CHECK(sh("condition --problem integers --input 1/2").code == 1);
        CHECK(has_line(sh("condition --problem integers --input 7").out, "mu 8"));

        auto dir = scratch();
        auto lfile = (dir / "log.txt").string();
        auto red = sh("reduce --target cpf --problem toy-root --input 4 --budget 1000000000 --log " + lfile);
        CHECK(red.code == 0);
        CHECK(has_line(red.out, "outcome accept"));
        CHECK(slurp(lfile) == red.out);
        CHECK(sh("reduce --target safeas --problem toy-root --input -4 --budget 100000000").code == 2);
        CHECK(sh("reduce --target safeas --problem toy-root --input 4 --budget 1000000000000000").code == 0);
        CHECK(sh("reduce --target sat --problem toy-root --input 4").code == 3);
}

TEST_CASE("props")
{
        auto r = sh("props --suite fpnum --t 3 --exhaustive");
        CHECK(r.code == 0);
        CHECK(r.out.find("PASS a-eps") != std::string::npos);
        CHECK(r.out.find("FAIL") == std::string::npos);
        CHECK(sh("props --suite fast2sum --t 53 --count 2000").code == 0);
        CHECK(sh("props --suite frobnicate").code == 3);
}
