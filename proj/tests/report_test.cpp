// Copyright 2026 The nplm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "nplm/config.hpp"
#include "nplm/report.hpp"

namespace nplm {
namespace {

CsvTable reparse(const CsvTable& t) {
  std::istringstream in(to_csv_string(t));
  return read_csv(in);
}

TEST(Report, RealsRoundTripExactly) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 123456.789, 1e-300, 5e-324, 1.7976931348623157e308, -2.5})
    EXPECT_EQ(parse_real(format_real(v)), v);
  EXPECT_THROW(parse_real(""), FormatError);
  EXPECT_THROW(parse_real("1.5x"), FormatError);
  EXPECT_EQ(parse_count("42"), 42u);
  EXPECT_THROW(parse_count("-1"), FormatError);
  EXPECT_THROW(parse_count("4.2"), FormatError);
}

TEST(Report, EvalRowsRoundTrip) {
  const std::vector<EvalRow> rows = {{"news", "parametric", 0, 123.456789, std::nullopt},
                                     {"news", "knn", 500000, 98.0000000001, 12345.5},
                                     {"code, \"odd\" domain", "ric_basic", 7, 1.0 / 7.0, std::nullopt}};
  const auto t = eval_table(9, rows);
  const auto back = reparse(t);
  EXPECT_EQ(back.meta_value("seed"), "9");
  EXPECT_EQ(eval_rows(back), rows);
  EXPECT_EQ(to_csv_string(back), to_csv_string(t));
}

TEST(Report, OtherTablesRoundTrip) {
  const std::vector<SweepRow> sweep = {{0.1, "knn", 50000, 200.5}, {1.0, "ric_basic", 500000, 150.25}};
  EXPECT_EQ(sweep_rows(reparse(sweep_table(1, sweep))), sweep);
  const std::vector<BenchRow> bench = {{"parametric", 0, 0, 50000.5, 300.0}, {"knn_ivfpq", 100000, 8, 900.125, 180.0}};
  EXPECT_EQ(bench_rows(reparse(bench_table(2, bench))), bench);
  const std::vector<OptOutRow> opt = {{"knn", 1, 3.5, 9.75, 10.0}};
  EXPECT_EQ(opt_out_rows(reparse(opt_out_table(3, opt))), opt);
}

TEST(Report, CsvQuotingAndErrors) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), FormatError);
  std::istringstream ragged("a,b\n1,2,3\n");
  EXPECT_THROW(read_csv(ragged), FormatError);
  std::istringstream open_quote("a\n\"never closed\n");
  EXPECT_THROW(read_csv(open_quote), FormatError);
  std::istringstream crlf("# seed=4\r\nx,y\r\n1,2\r\n");
  const auto t = read_csv(crlf);
  EXPECT_EQ(t.meta_value("seed"), "4");
  EXPECT_EQ(t.rows, (std::vector<std::vector<std::string>>{{"1", "2"}}));
  EXPECT_THROW(t.column("z"), FormatError);
}

TEST(Config, DefaultsWhenEmpty) {
  const auto c = parse_run_config(nlohmann::json::object());
  EXPECT_EQ(c.eval.max_length, 1024u);
  EXPECT_EQ(c.eval.stride, 512u);
  EXPECT_EQ(c.knn.k, 1024u);
  EXPECT_EQ(c.knn.temperature, 20.0);
  EXPECT_EQ(c.knn.lambda, 0.3);
  EXPECT_EQ(c.store.blocks.length, 1024u);
  EXPECT_EQ(c.store.blocks.stride, 512u);
  EXPECT_EQ(c.ric.variant, RicVariant::kBasic);
  EXPECT_EQ(c.max_pii_share, 0.5);
}

TEST(Config, SectionsAndDomainOverrides) {
  const auto j = nlohmann::json::parse(R"({
    "seed": 7,
    "eval": {"max_length": 256, "stride": 128},
    "lm": {"order": 3, "cache_weight": 0.1},
    "index": {"kind": "ivfpq", "nlist": 64, "probe": 4},
    "blocks": {"length": 128, "stride": 64},
    "knn": {"lambda": 0.25, "k": 64, "tau": 5, "domains": [{"domain": "code", "lambda": 0.5}]},
    "ric": {"variant": "concat_next"}
  })");
  const auto c = parse_run_config(j);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.eval.max_length, 256u);
  EXPECT_EQ(c.lm.order, 3u);
  EXPECT_EQ(c.store.index.kind, IndexKind::kIvfPq);
  EXPECT_EQ(c.store.index.ivfpq.nlist, 64u);
  EXPECT_EQ(c.knn.temperature, 5.0);
  EXPECT_EQ(c.knn_for("news").lambda, 0.25);
  EXPECT_EQ(c.knn_for("code").lambda, 0.5);
  EXPECT_EQ(c.knn_for("code").k, 64u);  // inherits the global value
  const auto r = c.ric_for_store();
  EXPECT_EQ(r.variant, RicVariant::kConcatNext);
  EXPECT_EQ(r.block_length, 128u);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"knn": {"lambda": 2}})")), InvalidArgument);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"eval": {"stride": 0}})")), InvalidArgument);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"knn": {"k": "many"}})")), FormatError);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"ric": {"variant": "nope"}})")), InvalidArgument);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), IoError);
}

}  // namespace
}  // namespace nplm
