#pragma once

// Published tables and generators shared by the unit tests and the acceptance binary.

#include "prefbench/api_call.hpp"
#include "prefbench/schema.hpp"

#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace testing {

// Domain -> argument names, transcribed from the published schema tables.
inline const std::map<std::string, std::vector<std::string>> kBaseTable = {
    {"GetBanks", {"recipient_account_type"}},
    {"GetBuses", {"departure_date", "departure_time", "destination", "group_size", "origin"}},
    {"GetEvents", {"category", "city", "date", "event_name", "event_type", "number_of_tickets"}},
    {"GetFlights", {"airlines", "departure_date", "destination", "flight_class", "origin", "passengers", "return_date"}},
    {"GetHomes", {"area", "number_of_baths", "number_of_beds", "pets_allowed", "property_name", "visit_date"}},
    {"GetHotels", {"average_star", "check_in_date", "has_wifi", "hotel_name", "location", "number_of_days", "number_of_rooms"}},
    {"GetMusic", {"artist", "playback_device", "song_name"}},
    {"GetRentalCars", {"car_type", "dropoff_date", "pickup_city", "pickup_date", "pickup_location", "pickup_time"}},
    {"GetRestaurants", {"category", "date", "number_of_seats", "price_range", "restaurant_name", "time"}},
    {"GetRideSharing", {"destination", "number_of_seats", "shared_ride"}},
    {"GetTravel", {"category", "free_entry", "good_for_kids", "location"}},
    {"GetMedia", {"genre"}},
    {"GetMovies", {"genre"}},
    {"GetWeather", {"city", "date"}},
};

inline const std::map<std::string, std::vector<std::string>> kExtendedTable = {
    {"GetCampground", {"check_in_date", "location", "number_of_guests", "number_of_nights", "site_type"}},
    {"GetCityTour", {"city", "date", "number_of_people"}},
    {"GetCookingClass", {"class_type", "date", "location", "number_of_attendees"}},
    {"GetFitnessClass", {"class_type", "date", "location", "number_of_attendees"}},
    {"GetSkiPass", {"date", "number_of_passes", "pass_type", "resort"}},
    {"GetParkingSpot", {"date", "location", "parking_type", "time"}},
    {"GetThemePark", {"date", "number_of_tickets", "park", "ticket_type"}},
};

struct Row {
    const char* domain;
    const char* slot;
    const char* value;  // parsed as a bare token
    const char* group;
    const char* preference;
};

// Published mapping tables, one entry per listed value. Travel preferences use
// the *_usage names that the aggregation records carry.
inline const Row kBaseRows[] = {
    {"GetRestaurants", "price_range", "cheap", "budget_conscious", "low_cost"},
    {"GetRentalCars", "car_type", "Compact", "budget_conscious", "low_cost"},
    {"GetHotels", "average_star", "1", "budget_conscious", "low_cost"},
    {"GetHotels", "average_star", "2", "budget_conscious", "low_cost"},
    {"GetRideSharing", "shared_ride", "True", "budget_conscious", "low_cost"},
    {"GetTravel", "free_entry", "True", "budget_conscious", "low_cost"},
    {"GetFlights", "flight_class", "Economy", "budget_conscious", "low_cost"},
    {"GetRestaurants", "price_range", "pricey", "budget_conscious", "high_cost"},
    {"GetRentalCars", "car_type", "Full-size", "budget_conscious", "high_cost"},
    {"GetHotels", "average_star", "4", "budget_conscious", "high_cost"},
    {"GetHotels", "average_star", "5", "budget_conscious", "high_cost"},
    {"GetBuses", "group_size", "1", "travel", "solo_usage"},
    {"GetFlights", "passengers", "1", "travel", "solo_usage"},
    {"GetRideSharing", "number_of_seats", "1", "travel", "solo_usage"},
    {"GetEvents", "number_of_tickets", "1", "travel", "solo_usage"},
    {"GetRestaurants", "number_of_seats", "1", "travel", "solo_usage"},
    {"GetBuses", "group_size", "2", "travel", "group_usage"},
    {"GetBuses", "group_size", "3", "travel", "group_usage"},
    {"GetBuses", "group_size", "4", "travel", "group_usage"},
    {"GetFlights", "passengers", "2", "travel", "group_usage"},
    {"GetFlights", "passengers", "3", "travel", "group_usage"},
    {"GetFlights", "passengers", "4", "travel", "group_usage"},
    {"GetRideSharing", "number_of_seats", "2", "travel", "group_usage"},
    {"GetRideSharing", "number_of_seats", "3", "travel", "group_usage"},
    {"GetRideSharing", "number_of_seats", "4", "travel", "group_usage"},
    {"GetEvents", "number_of_tickets", "2", "travel", "group_usage"},
    {"GetEvents", "number_of_tickets", "3", "travel", "group_usage"},
    {"GetEvents", "number_of_tickets", "4", "travel", "group_usage"},
    {"GetRestaurants", "number_of_seats", "2", "travel", "group_usage"},
    {"GetRestaurants", "number_of_seats", "3", "travel", "group_usage"},
    {"GetRestaurants", "number_of_seats", "4", "travel", "group_usage"},
};

inline const Row kExtendedRows[] = {
    {"GetCampground", "site_type", "Tent site", "budget_conscious", "low_cost"},
    {"GetCookingClass", "class_type", "Group class", "budget_conscious", "low_cost"},
    {"GetFitnessClass", "class_type", "Group session", "budget_conscious", "low_cost"},
    {"GetSkiPass", "pass_type", "Standard pass", "budget_conscious", "low_cost"},
    {"GetParkingSpot", "parking_type", "Self-park garage", "budget_conscious", "low_cost"},
    {"GetThemePark", "ticket_type", "General admission", "budget_conscious", "low_cost"},
    {"GetCampground", "site_type", "Glamping cabin", "budget_conscious", "high_cost"},
    {"GetCookingClass", "class_type", "Private", "budget_conscious", "high_cost"},
    {"GetFitnessClass", "class_type", "Personal training", "budget_conscious", "high_cost"},
    {"GetSkiPass", "pass_type", "VIP pass", "budget_conscious", "high_cost"},
    {"GetParkingSpot", "parking_type", "Valet", "budget_conscious", "high_cost"},
    {"GetThemePark", "ticket_type", "VIP FastPass", "budget_conscious", "high_cost"},
    {"GetCampground", "number_of_guests", "1", "travel", "solo_usage"},
    {"GetCityTour", "number_of_people", "1", "travel", "solo_usage"},
    {"GetCookingClass", "number_of_attendees", "1", "travel", "solo_usage"},
    {"GetFitnessClass", "number_of_attendees", "1", "travel", "solo_usage"},
    {"GetSkiPass", "number_of_passes", "1", "travel", "solo_usage"},
    {"GetThemePark", "number_of_tickets", "1", "travel", "solo_usage"},
};

// Arguments that carry no preference.
inline const std::tuple<const char*, const char*, const char*> kNonPreference[] = {
    {"GetWeather", "city", "San Francisco"},
    {"GetWeather", "date", "2024-05-01"},
    {"GetFlights", "origin", "Boston"},
    {"GetFlights", "destination", "Seattle"},
    {"GetFlights", "departure_date", "2024-03-02"},
    {"GetFlights", "flight_class", "Business"},
    {"GetFlights", "passengers", "7"},
    {"GetFlights", "airlines", "Delta"},
    {"GetHotels", "location", "Denver"},
    {"GetHotels", "average_star", "3"},
    {"GetHotels", "has_wifi", "True"},
    {"GetRestaurants", "category", "Thai"},
    {"GetRestaurants", "price_range", "moderate"},
    {"GetRentalCars", "car_type", "Standard"},
    {"GetRideSharing", "shared_ride", "False"},
    {"GetTravel", "free_entry", "False"},
    {"GetTravel", "good_for_kids", "True"},
    {"GetHomes", "pets_allowed", "True"},
    {"GetMusic", "artist", "Adele"},
    {"GetBanks", "recipient_account_type", "checking"},
};

// Random schema-valid call. Text values draw from characters that stress
// quoting and escaping.
inline prefbench::ApiCall random_call(std::mt19937_64& rng, const prefbench::ApiSchema& schema) {
    static const std::string alphabet = "abcXYZ019 _-.,=()\"'\\/:;&é";
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    const auto& d = schema.domains()[pick(schema.domains().size())];
    prefbench::ApiCall c{d.name, {}};
    for (const auto& a : d.arguments) {
        if (pick(2) == 0) continue;
        switch (a.type) {
            case prefbench::ValueType::boolean: c.args.emplace(a.name, prefbench::Value::boolean(pick(2) == 1)); break;
            case prefbench::ValueType::integer_text: c.args.emplace(a.name, prefbench::Value::text(std::to_string(pick(12)), pick(2) == 1)); break;
            case prefbench::ValueType::text: {
                std::string s;
                std::size_t len = 1 + pick(10);
                while (s.size() < len) {
                    std::size_t i = pick(alphabet.size());
                    if (static_cast<unsigned char>(alphabet[i]) >= 0x80) {
                        s += "é";
                    } else {
                        s += alphabet[i];
                    }
                }
                c.args.emplace(a.name, prefbench::Value::text(s, pick(2) == 1));
                break;
            }
        }
    }
    return c;
}

}  // namespace testing
