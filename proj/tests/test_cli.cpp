// End-to-end tests of the command line tool: golden text and machine
// documents, exit codes, and link-file round trips.  The binary path comes
// from the HILTONKIT_BIN environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef _WIN32
#include <sys/wait.h>
#include <unistd.h>
#endif

namespace {

using nlohmann::json;

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
    const char* bin = std::getenv("HILTONKIT_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd =
        std::string(bin) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    RunResult r;
    r.out = std::move(out);
#ifdef _WIN32
    r.code = status;
#else
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
#endif
    return r;
}

std::string temp_path(const std::string& tag) {
    return (std::filesystem::temp_directory_path() /
            ("hk_cli_" + tag + "_" + std::to_string(::getpid()) + ".json"))
        .string();
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("basis listing") {
    auto table = run("basis --k 2,2 --wmax 4");
    CHECK(table.code == 0);
    CHECK(contains(table.out, "weight 2: 1"));
    CHECK(contains(table.out, "weight 4: 3"));
    CHECK(contains(table.out, "[i2,[i1,i2]]"));
    CHECK(contains(table.out, "height 5"));

    auto counts = run("basis --k 2,2,2 --wmax 5");
    CHECK(counts.code == 0);
    CHECK(contains(counts.out, "weight 5: 48"));

    auto machine = run("basis --k 2,2 --wmax 4 --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    CHECK(doc.at("schema") == "hiltonkit/1");
    CHECK(doc.at("command") == "basis");
    CHECK(doc.at("signature").at("k") == json::array({2, 2}));
    const auto& els = doc.at("elements");
    REQUIRE(els.size() == 8);
    CHECK(els[0].at("term") == "i1");
    CHECK(els[0].at("position") == 1);
    CHECK(els[2].at("term") == json::array({"i1", "i2"}));
    CHECK(els[2].at("weight") == 2);
    CHECK(els[2].at("height") == 3);

    auto again = run("basis --k 2,2 --wmax 4 --format machine");
    CHECK(again.out == machine.out);  // byte-stable
}

TEST_CASE("splitting tables") {
    auto machine = run("split --k 2,2 --m 4 --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    CHECK(doc.at("command") == "split");
    CHECK(doc.at("w0") == 4);
    CHECK(doc.at("summary") == "Z2^3 + Z^2");
    const auto& rows = doc.at("rows");
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].at("term") == "i1");
    CHECK(rows[0].at("height") == 2);
    CHECK(rows[0].at("status") == "candidate");
    CHECK(rows[0].at("group") == "Z2");
    CHECK(rows[7].at("group") == "0");

    auto three = run("split --k 2,2 --m 3 --format machine");
    REQUIRE(three.code == 0);
    CHECK(json::parse(three.out).at("summary") == "Z^3");

    auto lost = run("split --k 2,2 --m 4 --data /nonexistent", true);
    CHECK(lost.code == 0);
    CHECK(contains(lost.out, "warning"));
    CHECK(contains(lost.out, "unknown"));
    CHECK(contains(lost.out, "summary: 0"));

    auto no_m = run("split --k 2,2", true);
    CHECK(no_m.code == 2);
}

TEST_CASE("reduction traces") {
    auto machine = run("reduce -n 4 --k 2,2 --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    const json want = json::array(
        {{{"step_index", 1}, {"j", 2}, {"i", 1}, {"new_symbol", 3}, {"new_codim", 3},
          {"rendering", "tau^S_{2,1}"}},
         {{"step_index", 2}, {"j", 3}, {"i", 1}, {"new_symbol", 4}, {"new_codim", 4},
          {"rendering", "tau^S_{3,1}"}},
         {{"step_index", 3}, {"j", 3}, {"i", 2}, {"new_symbol", 5}, {"new_codim", 4},
          {"rendering", "tau^S_{3,2}"}},
         {{"step_index", 4}, {"j", 4}, {"i", 1}, {"new_symbol", 6}, {"new_codim", 5},
          {"rendering", "tau^S_{4,1}"}}});
    CHECK(doc.at("steps") == want);

    auto empty = run("reduce -n 0 --k 2,2 --format machine");
    REQUIRE(empty.code == 0);
    CHECK(json::parse(empty.out).at("steps") == json::array());

    auto full = run("reduce --k 2,2 --m 4 --format machine");
    REQUIRE(full.code == 0);
    const json fdoc = json::parse(full.out);
    REQUIRE(fdoc.at("steps").size() == 6);
    CHECK(fdoc.at("steps")[5].at("rendering") == "tau^S_{5,2}");
    CHECK(fdoc.at("steps")[5].at("new_symbol") == 8);

    auto unbounded = run("reduce --k 2,2", true);
    CHECK(unbounded.code == 2);
    CHECK(contains(unbounded.out, "-n"));
}

TEST_CASE("coefficient projection through the tool") {
    auto machine =
        run("hilton '[i1,[i1,i2]]' '[i1,[i1,i2]]' --k 2,2 --m 4 --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    CHECK(doc.at("gamma") == json::array({"i1", json::array({"i1", "i2"})}));
    CHECK(doc.at("plain") == "1");
    CHECK(doc.at("square") == "0");
    CHECK(doc.at("pipeline").at("rendering") == "p_4 o tau^R_{3,1} o tau^R_{2,1}");
    CHECK(doc.at("pipeline").at("final_symbol") == 4);

    auto mixed = run(
        "hilton '2*[i1,[i1,i2]] - [i2,[i1,i2]]' '[i2,[i1,i2]]' --k 2,2 --m 4 "
        "--format machine");
    REQUIRE(mixed.code == 0);
    CHECK(json::parse(mixed.out).at("plain") == "-1");

    auto reversed = run(
        "hilton '[i2,[i1,[i1,i2]]]' '[i2,i1]' --k 2,2 --m 4 --order 'i2<i1' "
        "--format machine");
    REQUIRE(reversed.code == 0);
    const json rdoc = json::parse(reversed.out);
    CHECK(rdoc.at("plain") == "0");
    CHECK(rdoc.at("square") == "-1");
}

TEST_CASE("intersection and surgery modes") {
    auto eval = run("tau '[i1,i2]' 2 1 --k 2,2 --format machine");
    REQUIRE(eval.code == 0);
    const json edoc = json::parse(eval.out);
    REQUIRE(edoc.at("cells").size() == 1);
    CHECK(edoc.at("cells")[0].at("sign") == 1);
    CHECK(edoc.at("cells")[0].at("factors")[0].at("kind") == "point");
    CHECK(edoc.at("cells")[0].at("factors")[0].at("pair") == 0);

    auto proj = run("tau '[i1,i2]' 2 1 --mode p --k 2,2 --format machine");
    REQUIRE(proj.code == 0);
    const json pdoc = json::parse(proj.out);
    REQUIRE(pdoc.at("classes").at("terms").size() == 1);
    CHECK(pdoc.at("classes").at("terms")[0].at("term") == "i3");
    CHECK(pdoc.at("classes").at("terms")[0].at("marker") == "plain");
    CHECK(pdoc.at("classes").at("terms")[0].at("coeff") == "1");

    auto surgery =
        run("tau '[i1,[i1,i2]]' 2 1 --mode R --k 2,2 --m 4 --format machine");
    REQUIRE(surgery.code == 0);
    const json sdoc = json::parse(surgery.out);
    CHECK(sdoc.at("new_symbol") == 3);
    CHECK(sdoc.at("w0") == 4);
    REQUIRE(sdoc.at("classes").at("terms").size() == 1);
    CHECK(sdoc.at("classes").at("terms")[0].at("term") ==
          json::array({"i1", "i3"}));
    CHECK(sdoc.at("classes").at("terms")[0].at("coeff") == "1");
    for (const auto& comp : sdoc.at("link").at("components"))
        if (comp.at("symbol") == 2) CHECK(comp.at("cells").empty());
}

TEST_CASE("link documents round trip") {
    const std::string path = temp_path("append");
    auto append = run("tau '[i1,i2]' 2 1 --mode append --k 2,2 --format machine");
    REQUIRE(append.code == 0);
    {
        std::ofstream out(path);
        out << append.out;
    }
    // The envelope is accepted directly as @FILE input.
    auto eval = run("tau '@" + path + "' 3 1 --mode eval --format machine");
    REQUIRE(eval.code == 0);
    CHECK(json::parse(eval.out).at("cells").empty());  // point component

    // The bare link document works too.
    const std::string bare = temp_path("bare");
    {
        std::ofstream out(bare);
        out << json::parse(append.out).at("link").dump(2) << "\n";
    }
    auto proj = run("tau '@" + bare + "' 2 1 --mode p --format machine");
    REQUIRE(proj.code == 0);
    const json pdoc = json::parse(proj.out);
    CHECK(pdoc.at("new_symbol") == 4);
    REQUIRE(pdoc.at("classes").at("terms").size() == 1);
    CHECK(pdoc.at("classes").at("terms")[0].at("term") == "i4");

    std::filesystem::remove(path);
    std::filesystem::remove(bare);
}

TEST_CASE("normalization output") {
    auto machine = run("normalize '[i1,[i2,i2]]' --k 2,2 --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    const auto& terms = doc.at("result").at("terms");
    REQUIRE(terms.size() == 1);
    CHECK(terms[0].at("term") == json::array({"i2", json::array({"i1", "i2"})}));
    CHECK(terms[0].at("marker") == "plain");
    CHECK(terms[0].at("coeff") == "-2");

    auto table = run("normalize '[[i1,i2],[i1,i2]]' --k 2,2");
    CHECK(table.code == 0);
    CHECK(contains(table.out, "sq([i1,i2])"));
    CHECK(contains(table.out, "two-torsion squares: none"));
    CHECK(contains(table.out, "possibly zero squares: [i1,i2]"));
}

TEST_CASE("exit codes") {
    CHECK(run("basis --k 1,2", true).code == 2);
    CHECK(run("hilton 'i1' '[i2,i1]' --k 2,2 --m 4", true).code == 2);
    CHECK(run("tau '[i1,i2]' 2 2 --k 2,2", true).code == 2);
    CHECK(run("basis --k 2,2 --no-such-flag", true).code == 2);
    CHECK(run("nonsense", true).code == 2);
    CHECK(run("normalize '[i1,i2' --k 2,2", true).code == 2);

    // A link whose component repeats a cell cannot be read as a class sum:
    // surgery with no corrective pass (w0=1) hands it straight to extraction.
    const std::string path = temp_path("dup");
    {
        std::ofstream out(path);
        out << R"({"signature":{"k":[2,2]},"ambient_height":0,
  "registry":[{"pair":0,"dim_a":1,"dim_b":1,"level":1,"origin":["i1","i2"]}],
  "components":[
    {"symbol":1,"cells":[
      {"sign":1,"factors":[{"kind":"sphere","dim":1,"tag":"B","pair":0,"shift":0}]},
      {"sign":1,"factors":[{"kind":"sphere","dim":1,"tag":"B","pair":0,"shift":0}]}]},
    {"symbol":2,"cells":[
      {"sign":1,"factors":[{"kind":"sphere","dim":1,"tag":"A","pair":0,"shift":0}]}]}]})";
    }
    auto bad = run("tau '@" + path + "' 2 1 --mode R --w0 1", true);
    CHECK(bad.code == 3);
    CHECK(contains(bad.out, "error"));
    std::filesystem::remove(path);
}

TEST_CASE("selftest subcommand") {
    auto text = run("selftest", true);
    CHECK(text.code == 0);
    CHECK(contains(text.out, "criterion 10"));
    CHECK(contains(text.out, "selftest: ok"));

    auto machine = run("selftest --format machine");
    REQUIRE(machine.code == 0);
    const json doc = json::parse(machine.out);
    CHECK(doc.at("command") == "selftest");
    REQUIRE(doc.at("results").size() == 10);
    for (const auto& row : doc.at("results")) {
        CHECK(row.at("status") != "FAIL");
        CHECK(row.at("id").get<int>() >= 1);
        CHECK(row.at("id").get<int>() <= 10);
    }

    // Without annotation data the splitting suite reports SKIP, not failure.
    auto degraded = run("selftest --data /nonexistent --format machine");
    REQUIRE(degraded.code == 0);
    const json ddoc = json::parse(degraded.out);
    bool saw_skip = false;
    for (const auto& row : ddoc.at("results"))
        if (row.at("id") == 7) {
            CHECK(row.at("status") == "SKIP");
            saw_skip = true;
        }
    CHECK(saw_skip);
}
