#include <dfk/algebra/ops.hpp>
#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/core/schema.hpp>
#include <dfk/io/csv.hpp>
#include <dfk/io/render.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace dfk;

namespace {

const char* kSales =
    "Year,Month,Sales\n"
    "2001,Jan,100\n2001,Feb,110\n2001,Mar,120\n"
    "2002,Jan,150\n2002,Feb,200\n2002,Mar,250\n"
    "2003,Jan,300\n2003,Feb,310\n";

template <typename F>
auto error_of(F&& f) -> std::optional<ErrorKind> {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

}  // namespace

TEST(Csv, ParsesHeaderAndRawCells) {
    auto df = io::parse_csv(kSales);
    EXPECT_EQ(df.rows(), 8u);
    EXPECT_EQ(df.col_labels(), (std::vector<std::string>{"Year", "Month", "Sales"}));
    EXPECT_EQ(df.at(7, 2), CellValue::raw("310"));
    EXPECT_EQ(df.row_label(7), "7");
    EXPECT_EQ(df.domain(0), Domain::Unspecified);
}

TEST(Csv, RoundTripIsByteExact) {
    EXPECT_EQ(io::format_csv(io::parse_csv(kSales)), kSales);
    const std::string labelled = "id,a,b\nr1,1,\"x,y\"\nr2,,\"say \"\"hi\"\"\"\n";
    io::CsvOptions opts;
    opts.has_row_labels = true;
    auto df = io::parse_csv(labelled, opts);
    EXPECT_EQ(df.row_labels(), (std::vector<std::string>{"r1", "r2"}));
    EXPECT_EQ(df.at(0, 1).text(), "x,y");
    EXPECT_EQ(df.at(1, 1).text(), "say \"hi\"");
    EXPECT_TRUE(df.at(1, 0).text().empty());
    auto again = io::parse_csv(io::format_csv(df, opts), opts);
    EXPECT_TRUE(again == df);
}

TEST(Csv, EmbeddedDelimiterIsQuotedOnOutput) {
    auto df = Dataframe::from_text({{"a,b", "plain"}}, {"x", "y"});
    EXPECT_EQ(io::format_csv(df), "x,y\n\"a,b\",plain\n");
}

TEST(Csv, ZeroRowsGiveHeaderOnly) {
    auto df = Dataframe::from_text({}, {"x", "y"});
    EXPECT_EQ(io::format_csv(df), "x,y\n");
    auto back = io::parse_csv("x,y\n");
    EXPECT_EQ(back.rows(), 0u);
    EXPECT_EQ(back.cols(), 2u);
}

TEST(Csv, CrlfAndLfAgree) {
    auto lf = io::parse_csv("a,b\n1,2\n3,4\n");
    auto crlf = io::parse_csv("a,b\r\n1,2\r\n3,4\r\n");
    auto no_final = io::parse_csv("a,b\r\n1,2\r\n3,4");
    EXPECT_TRUE(lf == crlf);
    EXPECT_TRUE(lf == no_final);
}

TEST(Csv, Errors) {
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\n1,2,3\n"); }), ErrorKind::RaggedRow);
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\n1\n"); }), ErrorKind::RaggedRow);
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\n\"1,2\n"); }), ErrorKind::QuoteError);
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\n\"x\ny\",2\n"); }), ErrorKind::QuoteError);
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\n\"x\"z,2\n"); }), ErrorKind::QuoteError);
    EXPECT_EQ(error_of([] { io::parse_csv("a,b\nx\"z,2\n"); }), ErrorKind::QuoteError);
    io::CsvOptions loose;
    loose.strict_quoting = false;
    EXPECT_EQ(io::parse_csv("a,b\nx\"z,2\n", loose).at(0, 0).text(), "x\"z");
    auto broken = Dataframe::from_text({{"line\nbreak"}}, {"x"});
    EXPECT_EQ(error_of([&] { io::format_csv(broken); }), ErrorKind::QuoteError);
    EXPECT_EQ(error_of([] { io::read_csv("/nonexistent/dir/file.csv"); }), ErrorKind::Io);
}

TEST(Csv, FusedInductionMatchesDeferred) {
    io::CsvOptions fused;
    fused.fuse_induction = true;
    auto a = io::parse_csv(kSales, fused);
    auto b = induce_all(io::parse_csv(kSales));
    EXPECT_TRUE(a == b);
    EXPECT_EQ(a.schema(), (std::vector<Domain>{Domain::Int, Domain::Str, Domain::Int}));
}

TEST(Csv, RandomRoundTrips) {
    std::mt19937_64 rng(99);
    const std::vector<std::string> pieces{"a", "1", ",", "\"", " ", "", "é", ";"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<std::size_t> dim(0, 5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = dim(rng);
        const std::size_t n = 1 + dim(rng);
        std::vector<std::vector<std::string>> text(m, std::vector<std::string>(n));
        for (auto& r : text) {
            for (auto& c : r) {
                for (std::size_t k = dim(rng) % 3; k > 0; --k) {
                    c += pieces[pick(rng)];
                }
            }
        }
        std::vector<std::string> labels;
        for (std::size_t j = 0; j < n; ++j) {
            labels.push_back("h" + std::to_string(j) + (j % 2 ? ",x" : ""));
        }
        auto df = Dataframe::from_text(text, labels);
        auto back = io::parse_csv(io::format_csv(df));
        ASSERT_TRUE(back == df) << io::format_csv(df);
    }
}

TEST(Csv, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "dfk_io_test.csv";
    auto df = io::parse_csv(kSales);
    io::write_csv(df, path.string());
    EXPECT_TRUE(io::read_csv(path.string()) == df);
    std::filesystem::remove(path);
}

TEST(Render, Layout) {
    auto df = Dataframe::from_text({{"2001", "Jan", ""}, {"2002", "February", "7"}}, {"Year", "Month", "Sales"},
                                   {"a", "bb"});
    const std::string want =
        "    Year     Month  Sales\n"
        "a   2001       Jan   NULL\n"
        "bb  2002  February      7\n";
    EXPECT_EQ(io::render(df), want);
}

TEST(Render, EmptyFrameIsHeaderOnly) {
    EXPECT_EQ(io::render(Dataframe::from_text({}, {"x", "yy"})), "  x  yy\n");
}

TEST(Render, EllipsisOnlyPastTwoK) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 8; ++i) {
        rows.push_back({std::to_string(i * 10)});
    }
    auto df = Dataframe::from_text(rows, {"v"});
    EXPECT_EQ(io::render(df, 4).find("..."), std::string::npos);
    const std::string want =
        "    v\n"
        "0   0\n"
        "1  10\n"
        "...\n"
        "6  60\n"
        "7  70\n";
    EXPECT_EQ(io::render(df, 2), want);
}

TEST(Render, LineCountsAndContent) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> dim(0, 20);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = dim(rng);
        const std::size_t k = dim(rng) % 6;
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < m; ++i) {
            rows.push_back({std::to_string(i)});
        }
        auto df = Dataframe::from_text(rows, {"v"});
        const auto text = io::render(df, k);
        std::vector<std::string> lines;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto nl = text.find('\n', pos);
            lines.push_back(text.substr(pos, nl - pos));
            pos = nl + 1;
        }
        const std::size_t ellipses = static_cast<std::size_t>(std::count(lines.begin(), lines.end(), "..."));
        ASSERT_EQ(lines.size() - 1 - ellipses, std::min(m, 2 * k));
        ASSERT_LE(ellipses, 1u);
        if (ellipses == 1) {
            ASSERT_EQ(text, io::render_split(algebra::head(df, k), algebra::tail(df, k)));
        }
    }
}

TEST(Render, CompositeAndTypedCells) {
    auto inner = std::make_shared<const Dataframe>(Dataframe::from_text({{"1"}, {"2"}}, {"x"}));
    auto df = Dataframe::from_rows({{CellValue::composite(inner), CellValue::real(2.5), CellValue::boolean(true)}},
                                   {"c", "f", "b"});
    EXPECT_EQ(io::render(df), "             c    f     b\n0  <2x1 frame>  2.5  true\n");
}
