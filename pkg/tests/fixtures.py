"""Hand-written definitions reused across test modules."""
from miron.mirons import SlotDecl, make_definition

PHASES = "(morning|afternoon|evening|night)"


def say_hello():
    return make_definition(
        "say_Hello",
        ["<Hi|Hello|Good {Morning:phaseOfDay}>"],
        slots=[SlotDecl("phaseOfDay", PHASES)],
        data_slots={"speechAct": "greetings", "politeForm": "true", "casualForm": "false"},
    )


def request_train():
    return make_definition(
        "request_train_connection",
        ["I am looking for a train( from {Paris:Departure})( to {Lyon:Destination})( {tomorrow:Day})( around {12:00:Time})"],
        slots=[
            SlotDecl("Departure"),
            SlotDecl("Destination"),
            SlotDecl("Day"),
            SlotDecl("Time"),
        ],
    )


def ask_time():
    return make_definition(
        "ask_time",
        ["(Sorry, )what time is it(, please)?", "tell me the time"],
    )
