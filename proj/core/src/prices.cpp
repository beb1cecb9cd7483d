#include "qtrade/prices.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>

#include "qtrade/errors.hpp"

namespace qtrade {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

bool parse_int(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Fixed-width decimal field, e.g. "07". Rejects signs and stray characters.
bool parse_fixed(std::string_view s, std::size_t width, int& out) {
    if (s.size() != width) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return parse_int(s, out);
}

}  // namespace

PriceSeries PriceSeries::from_points(std::vector<PricePoint> points) {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].price <= 0.0)
            throw DomainError("price must be positive at index " +
                              std::to_string(i));
        if (i > 0 && points[i].timestamp <= points[i - 1].timestamp)
            throw OrderingError("timestamps must be strictly increasing at index " +
                                std::to_string(i));
    }
    return PriceSeries(std::move(points));
}

Instant parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    text = trim(text);
    if (text.size() < 10) throw ParseError("timestamp too short");

    int y{}, mo{}, d{};
    if (!parse_fixed(text.substr(0, 4), 4, y) || text[4] != '-' ||
        !parse_fixed(text.substr(5, 2), 2, mo) || text[7] != '-' ||
        !parse_fixed(text.substr(8, 2), 2, d))
        throw ParseError("bad date in timestamp '" + std::string(text) + "'");

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok())
        throw ParseError("invalid calendar date '" + std::string(text) + "'");

    std::string_view rest = text.substr(10);
    int hh = 0, mi = 0, ss = 0;
    if (!rest.empty() && (rest[0] == 'T' || rest[0] == ' ')) {
        if (rest.size() < 9 || rest[3] != ':' || rest[6] != ':' ||
            !parse_fixed(rest.substr(1, 2), 2, hh) ||
            !parse_fixed(rest.substr(4, 2), 2, mi) ||
            !parse_fixed(rest.substr(7, 2), 2, ss))
            throw ParseError("bad time in timestamp '" + std::string(text) + "'");
        if (hh > 23 || mi > 59 || ss > 59)
            throw ParseError("time of day out of range in '" +
                             std::string(text) + "'");
        rest = rest.substr(9);
    }

    seconds offset{0};
    if (!rest.empty()) {
        if (rest == "Z") {
            // UTC designator
        } else if (rest[0] == '+' || rest[0] == '-') {
            const int sign = rest[0] == '+' ? 1 : -1;
            std::string_view z = rest.substr(1);
            int oh{}, om = 0;
            bool ok = false;
            if (z.size() == 5 && z[2] == ':')
                ok = parse_fixed(z.substr(0, 2), 2, oh) &&
                     parse_fixed(z.substr(3, 2), 2, om);
            else if (z.size() == 4)
                ok = parse_fixed(z.substr(0, 2), 2, oh) &&
                     parse_fixed(z.substr(2, 2), 2, om);
            else if (z.size() == 2)
                ok = parse_fixed(z, 2, oh);
            if (!ok || oh > 23 || om > 59)
                throw ParseError("bad zone offset in timestamp '" +
                                 std::string(text) + "'");
            offset = sign * (hours{oh} + minutes{om});
        } else {
            throw ParseError("trailing junk in timestamp '" +
                             std::string(text) + "'");
        }
    }

    const sys_seconds local = sys_days{ymd} + hours{hh} + minutes{mi} + seconds{ss};
    return local - offset;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

PriceSeries load_price_series(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError("empty file, expected header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    if (header.size() < 2 || lower(header[0]) != "timestamp" ||
        lower(header[1]) != "price")
        throw ParseError("expected header 'timestamp,price'", line_no);

    std::vector<PricePoint> points;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        const auto fields = split_csv(line);
        if (fields.size() < 2)
            throw ParseError("expected 'timestamp,price'", line_no);

        PricePoint pt;
        try {
            pt.timestamp = parse_timestamp(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()), line_no);
        }

        const std::string_view ps = fields[1];
        auto [ptr, ec] =
            std::from_chars(ps.data(), ps.data() + ps.size(), pt.price);
        if (ec != std::errc{} || ptr != ps.data() + ps.size())
            throw ParseError("bad price '" + std::string(ps) + "'", line_no);
        if (pt.price <= 0.0)
            throw DomainError("price must be positive (line " +
                              std::to_string(line_no) + ")");
        if (!points.empty() && pt.timestamp <= points.back().timestamp)
            throw OrderingError("non-increasing timestamp", line_no);

        points.push_back(pt);
    }

    if (points.empty()) throw ParseError("no data rows");
    return PriceSeries::from_points(std::move(points));
}

PriceSeries load_price_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return load_price_series(in);
}

std::vector<Bar> resample_bars(const PriceSeries& series,
                               std::chrono::seconds duration) {
    if (duration.count() <= 0) throw DomainError("bar duration must be positive");
    if (series.empty()) throw DomainError("cannot resample an empty series");

    const long long d = duration.count();
    std::vector<Bar> bars;
    for (const PricePoint& pt : series) {
        // Epoch-aligned bucket; floor division handles pre-1970 instants.
        long long sec = pt.timestamp.time_since_epoch().count();
        long long bucket = sec >= 0 ? sec / d : -((-sec + d - 1) / d);
        const Instant start{std::chrono::seconds{bucket * d}};

        if (bars.empty() || bars.back().start != start) {
            bars.push_back(Bar{pt.price, pt.price, pt.price, pt.price, start,
                               duration});
        } else {
            Bar& bar = bars.back();
            bar.high = std::max(bar.high, pt.price);
            bar.low = std::min(bar.low, pt.price);
            bar.close = pt.price;
        }
    }
    return bars;
}

}  // namespace qtrade
