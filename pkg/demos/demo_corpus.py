"""A small hand-written corpus of store listings shared by the demo scripts."""

RECORDS = [
    {
        "app_id": "com.lunar.sleep",
        "title": "Lunar Sleep Tracker",
        "description": (
            "Lunar turns your nights into insight. Place your phone on the "
            "mattress or pair a wearable and Lunar records movement, snoring "
            "and ambient noise to build a full picture of your sleep cycles. "
            "Wake up gently with the smart alarm that watches for your "
            "lightest sleep phase, review nightly summaries with stage "
            "charts, and follow bedtime routines designed by sleep coaches. "
            "Weekly trends show how caffeine, exercise and screen time "
            "change your recovery."
        ),
        "category": "HEALTH_AND_FITNESS",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.pulsefit.coach",
        "title": "PulseFit Coach",
        "description": (
            "PulseFit is the pocket coach for runners and lifters alike. "
            "Connect any heart rate strap or watch and get live interval "
            "guidance, recovery scoring and training load charts. Build "
            "custom workout plans, log every session automatically, and let "
            "adaptive coaching adjust next week based on your recent "
            "performance. Detailed exercise history, personal records and "
            "readiness insights keep your progression honest and your "
            "joints happy."
        ),
        "category": "HEALTH_AND_FITNESS",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.mealmind.planner",
        "title": "MealMind",
        "description": (
            "MealMind plans your week of eating in minutes. Tell it your "
            "goals and allergies and it proposes balanced menus, builds the "
            "grocery list, and tracks calories and macros as you log meals. "
            "Scan barcodes at the supermarket, import recipes from the web, "
            "and sync the shopping list with your household. Nutrition "
            "reports show protein, fibre and sugar trends so adjustments "
            "are based on data rather than guesswork."
        ),
        "category": "FOOD_AND_DRINK",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.quietmind.focus",
        "title": "QuietMind Focus",
        "description": (
            "QuietMind protects your attention. Start a focus session and "
            "the app blocks distracting apps, silences notifications and "
            "plays adaptive soundscapes. Guided breathing exercises between "
            "sessions lower stress, streaks and gentle statistics keep the "
            "habit alive, and the daily journal captures what pulled your "
            "attention away. Works offline and never sells your data to "
            "anyone, ever."
        ),
        "category": "PRODUCTIVITY",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.polyglot.phrase",
        "title": "Polyglot Phrasebook",
        "description": (
            "Polyglot gets you speaking on day one. Short lessons teach "
            "travel vocabulary, pronunciation drills use speech recognition "
            "to correct you kindly, and the offline phrasebook covers "
            "ordering food, asking directions and emergencies in forty "
            "languages. Flashcards with spaced repetition lock words into "
            "long-term memory, while conversation practice with recorded "
            "native speakers builds confidence before your trip."
        ),
        "category": "EDUCATION",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.cityhop.transit",
        "title": "CityHop Transit",
        "description": (
            "CityHop makes public transport feel effortless. Live departure "
            "boards for every stop, platform numbers for complicated "
            "stations, and routing that mixes metro, tram, bus and bike "
            "share. Buy tickets inside the app, get vibration alerts before "
            "your stop, and see delays the moment operators report them. "
            "Commute schedules learn your habits and warn you before you "
            "leave home."
        ),
        "category": "MAPS_AND_NAVIGATION",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    # the three below exist to demonstrate filtering
    {
        "app_id": "com.blockpop.game",
        "title": "BlockPop Saga",
        "description": (
            "Pop the blocks! Hundreds of candy-coloured puzzle levels with "
            "daily rewards, boosters, leagues and a cheerful soundtrack. "
            "Play offline anywhere, compete with friends in weekly "
            "tournaments and unlock silly hats for your jelly companion as "
            "you clear increasingly devious boards across the sugar "
            "islands."
        ),
        "category": "GAME_PUZZLE",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.notas.rapidas",
        "title": "Notas Rápidas",
        "description": (
            "Apunta tus ideas al instante con notas de colores, listas de "
            "tareas y recordatorios. Sincroniza entre dispositivos, protege "
            "notas privadas con huella digital y organiza todo con "
            "etiquetas. La viñeta [[non-english]] marca esta descripción "
            "para el detector de idioma de los ejemplos, que en producción "
            "sería una biblioteca de detección real."
        ),
        "category": "PRODUCTIVITY",
        "collected_at": "2024-02-01T00:00:00Z",
    },
    {
        "app_id": "com.tiny.flash",
        "title": "Tiny Flashlight",
        "description": "Turns on the flashlight. That is all it does.",
        "category": "TOOLS",
        "language": "en",
        "collected_at": "2024-02-01T00:00:00Z",
    },
]
